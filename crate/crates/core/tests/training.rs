use polyinr::io;
use polyinr::metrics;
use polyinr::training::{
    blob_dataset, fit_single_image, train_adversarial, GanOptions, Schedule, Stage,
};
use polyinr::{Generator, GeneratorConfig, ImageBuffer};

fn small() -> GeneratorConfig {
    GeneratorConfig {
        z_dim: 16,
        w_dim: 64,
        levels: 4,
        feature_dim: 32,
        ..Default::default()
    }
}

fn best_sample_psnr(gen: &Generator<f32>, target: &ImageBuffer<f32>) -> f64 {
    (0..16)
        .map(|i| {
            metrics::psnr(
                &gen.sample(&gen.random_latent(i), None, 16, 16).unwrap(),
                target,
            )
            .unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn one_image_adversarial_training_improves() {
    let data = blob_dataset(1, 16, 5);
    let opts = GanOptions {
        disc_hidden: 64,
        ..Default::default()
    };
    // a shorter run with the same seed is an exact prefix of the longer one
    let after = |steps: usize| {
        let schedule = Schedule::new(vec![Stage::new(16, steps * 8, 8)]).unwrap();
        train_adversarial(&small(), &data, &schedule, &opts, 7).unwrap()
    };
    let early = best_sample_psnr(&after(100).generator, &data[0]);
    let run = after(500);
    let late = best_sample_psnr(&run.generator, &data[0]);
    assert!(late > early, "{early} -> {late}");
    assert!(late >= 18.0, "{late}");
    let acc = &run.stages[0].accuracy;
    assert!(acc.iter().all(|a| (0.0..=1.0).contains(a)));
}

#[test]
fn blob_training_keeps_the_discriminator_informative() {
    let data = blob_dataset(32, 16, 1);
    let schedule = Schedule::new(vec![Stage::new(8, 300 * 8, 8)]).unwrap();
    let opts = GanOptions {
        disc_hidden: 64,
        ..Default::default()
    };
    let out = train_adversarial(&small(), &data, &schedule, &opts, 3).unwrap();
    let acc = &out.stages[0].accuracy;
    let recent = acc[acc.len() - 100..].iter().sum::<f64>() / 100.0;
    assert!(recent > 0.5 && recent < 1.0, "{recent}");
    assert_eq!(out.stages[0].r1.len(), 300usize.div_ceil(8));
}

#[test]
fn fitting_is_seeded_and_reduces_the_loss() {
    let target = ImageBuffer::from_fn(8, 8, |r, c| {
        [(r as f32 - 3.5) / 4.0, (c as f32 - 3.5) / 4.0, 0.2]
    });
    let a = fit_single_image(&small(), &target, 40, 1e-3, 9).unwrap();
    let b = fit_single_image(&small(), &target, 40, 1e-3, 9).unwrap();
    assert_eq!(
        io::generator_to_bytes(&a.generator),
        io::generator_to_bytes(&b.generator)
    );
    assert!(a.losses.last().unwrap() < &a.losses[0]);
    assert!(a.losses.iter().all(|l| l.is_finite()));
    assert!(matches!(
        fit_single_image(&small(), &target, 0, 1e-3, 9),
        Err(polyinr::Error::Argument(_))
    ));
}

#[test]
fn diverging_fit_reports_the_step() {
    let target = ImageBuffer::from_fn(4, 4, |r, _| [r as f32 / 3.0, 0.0, 0.0]);
    match fit_single_image(&small(), &target, 50, 1e30, 1) {
        Err(polyinr::Error::Training(msg)) => assert!(msg.contains("step"), "{msg}"),
        other => panic!(
            "expected a training error, got {:?}",
            other.map(|o| o.losses)
        ),
    }
}
