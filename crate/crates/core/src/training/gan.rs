use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::adam::{AdamConfig, AdamState};
use super::data::resize_area;
use super::discriminator::Discriminator;
use super::schedule::Schedule;
use crate::error::{Error, Result};
use crate::generator::{Generator, GeneratorConfig, GeneratorVars};
use crate::grid::CoordinateGrid;
use crate::image::ImageBuffer;
use crate::tensor::{Real, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct GanOptions {
    pub disc_hidden: usize,
    pub r1_gamma: f64,
    /// R1 is applied every this many discriminator steps (scaled up to match).
    pub r1_interval: usize,
}

impl Default for GanOptions {
    fn default() -> Self {
        GanOptions {
            disc_hidden: 128,
            r1_gamma: 1.0,
            r1_interval: 8,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct StageStats {
    pub resolution: usize,
    pub steps: usize,
    pub d_loss: Vec<f64>,
    pub g_loss: Vec<f64>,
    /// `(step, penalty)` for every regularized step.
    pub r1: Vec<(usize, f64)>,
    /// Discriminator real-vs-fake accuracy per step.
    pub accuracy: Vec<f64>,
    pub param_count: usize,
    pub start_fingerprint: u64,
    pub end_fingerprint: u64,
}

pub struct AdversarialOutcome {
    pub generator: Generator<f32>,
    pub stages: Vec<StageStats>,
}

/// FNV-1a over the bit patterns of every parameter, in canonical order.
pub fn fingerprint<T: Real>(params: &[Tensor<T>]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for p in params {
        for v in p.data() {
            for b in v.to_f64_lossy().to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x100000001b3);
            }
        }
    }
    h
}

/// Renders a batch of latents and flattens each image into one row (`B × 3P`).
pub fn generate_batch_graph<T: Real>(
    gen: &Generator<T>,
    tape: &mut Tape<T>,
    vars: &GeneratorVars,
    z: Var,
    grid: &CoordinateGrid<T>,
) -> Result<Var> {
    let w = gen.mapping_graph(tape, vars, z, None)?;
    let affines = gen.affine_graph(tape, vars, w)?;
    let coords = tape.constant(grid.points().clone());
    let mut rows = Vec::with_capacity(affines.len());
    for a in &affines {
        let syn = gen.synthesis_graph(tape, vars, a, coords)?;
        rows.push(tape.reshape(syn.rgb, vec![1, grid.len() * 3])?);
    }
    tape.concat_rows(&rows)
}

fn latent_batch(rng: &mut ChaCha8Rng, batch: usize, dim: usize) -> Tensor<f32> {
    let data = (0..batch * dim)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Tensor::new(vec![batch, dim], data).expect("shape")
}

fn softplus_mean(tape: &mut Tape<f32>, logits: Var, negate: bool) -> Result<Var> {
    let x = if negate {
        tape.scale(logits, -1.0)?
    } else {
        logits
    };
    let sp = tape.softplus(x)?;
    tape.mean(sp)
}

/// Progressive adversarial training with the non-saturating logistic loss
/// and lazy R1 regularization. The generator is carried unchanged from one
/// stage to the next; each stage gets a fresh discriminator and fresh
/// optimizer state.
pub fn train_adversarial(
    config: &GeneratorConfig,
    dataset: &[ImageBuffer<f32>],
    schedule: &Schedule,
    options: &GanOptions,
    seed: u64,
) -> Result<AdversarialOutcome> {
    train_adversarial_from(
        Generator::init(config, seed)?,
        dataset,
        schedule,
        options,
        seed,
    )
}

/// As [`train_adversarial`], starting from an existing generator.
pub fn train_adversarial_from(
    mut gen: Generator<f32>,
    dataset: &[ImageBuffer<f32>],
    schedule: &Schedule,
    options: &GanOptions,
    seed: u64,
) -> Result<AdversarialOutcome> {
    if dataset.is_empty() {
        return Err(Error::arg("dataset is empty"));
    }
    if gen.config().num_classes > 0 {
        return Err(Error::arg(
            "adversarial training from unlabeled images needs an unconditional generator",
        ));
    }
    if options.r1_interval == 0 {
        return Err(Error::arg("r1_interval must be at least 1"));
    }
    schedule.validate()?;
    let names: Vec<String> = gen
        .config()
        .param_specs()
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    let z_dim = gen.config().z_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a09e667f3bcc908);
    let mut stages = Vec::with_capacity(schedule.stages.len());

    for (stage_idx, stage) in schedule.stages.iter().enumerate() {
        let res = stage.resolution;
        let reals: Vec<Vec<f32>> = dataset
            .iter()
            .map(|img| resize_area(img, res, res).map(|r| r.data().to_vec()))
            .collect::<Result<_>>()?;
        let grid = CoordinateGrid::<f32>::unit(res, res)?;
        let mut disc = Discriminator::<f32>::new(res, res, options.disc_hidden, &mut rng)?;
        let mut g_opt = AdamState::new(AdamConfig::gan(stage.generator_lr), gen.params());
        let mut d_opt = AdamState::new(AdamConfig::gan(stage.discriminator_lr), disc.params());
        let steps = stage.steps();
        let batch = stage.batch_size;
        let mut stats = StageStats {
            resolution: res,
            steps,
            param_count: gen.num_params(),
            start_fingerprint: fingerprint(gen.params()),
            ..Default::default()
        };
        let diverged = |what: &str, step: usize| {
            Error::Training(format!(
                "{what} diverged at stage {stage_idx} ({res}×{res}), step {step}"
            ))
        };

        for step in 0..steps {
            // discriminator
            let picks: Vec<usize> = (0..batch)
                .map(|_| rng.random_range(0..reals.len()))
                .collect();
            let real_rows: Vec<Vec<f32>> = picks.iter().map(|&i| reals[i].clone()).collect();
            let z = latent_batch(&mut rng, batch, z_dim);
            let regularize = step % options.r1_interval == 0;
            {
                let mut tape = Tape::new();
                let gvars = gen.register(&mut tape, false);
                let dvars = disc.register(&mut tape, true);
                let zv = tape.constant(z);
                let fake = generate_batch_graph(&gen, &mut tape, &gvars, zv, &grid)?;
                let real = tape.constant(Tensor::from_rows(&real_rows)?);
                let real_pass = disc.forward_graph(&mut tape, &dvars, real)?;
                let fake_pass = disc.forward_graph(&mut tape, &dvars, fake)?;
                let lr_ = softplus_mean(&mut tape, real_pass.logits, true)?;
                let lf = softplus_mean(&mut tape, fake_pass.logits, false)?;
                let mut loss = tape.add(lr_, lf)?;
                let d_loss = tape.value(loss).data()[0] as f64;
                if regularize {
                    let gamma = options.r1_gamma * options.r1_interval as f64;
                    let r1 = disc.r1_penalty_graph(&mut tape, &dvars, &real_pass, gamma)?;
                    let r1_value = tape.value(r1).data()[0] as f64 / options.r1_interval as f64;
                    if !r1_value.is_finite() {
                        return Err(diverged("R1 penalty", step));
                    }
                    stats.r1.push((step, r1_value));
                    loss = tape.add(loss, r1)?;
                }
                if !d_loss.is_finite() {
                    return Err(diverged("discriminator loss", step));
                }
                let correct = tape
                    .value(real_pass.logits)
                    .data()
                    .iter()
                    .filter(|&&v| v > 0.0)
                    .count()
                    + tape
                        .value(fake_pass.logits)
                        .data()
                        .iter()
                        .filter(|&&v| v < 0.0)
                        .count();
                stats.accuracy.push(correct as f64 / (2 * batch) as f64);
                stats.d_loss.push(d_loss);
                let grads = tape.backward(loss)?;
                let g: Vec<_> = dvars.iter().map(|&v| grads.get(v)).collect();
                d_opt.update(disc.params_mut(), &g, &|i| format!("discriminator.{i}"))?;
            }

            // generator
            let z = latent_batch(&mut rng, batch, z_dim);
            {
                let mut tape = Tape::new();
                let gvars = gen.register(&mut tape, true);
                let dvars = disc.register(&mut tape, false);
                let zv = tape.constant(z);
                let fake = generate_batch_graph(&gen, &mut tape, &gvars, zv, &grid)?;
                let pass = disc.forward_graph(&mut tape, &dvars, fake)?;
                let loss = softplus_mean(&mut tape, pass.logits, true)?;
                let g_loss = tape.value(loss).data()[0] as f64;
                if !g_loss.is_finite() {
                    return Err(diverged("generator loss", step));
                }
                stats.g_loss.push(g_loss);
                let grads = tape.backward(loss)?;
                let g: Vec<_> = gvars.params.iter().map(|&v| grads.get(v)).collect();
                g_opt
                    .update(gen.params_mut(), &g, &|i| names[i].clone())
                    .map_err(|e| Error::Training(format!("stage {stage_idx}, step {step}: {e}")))?;
            }
        }
        stats.end_fingerprint = fingerprint(gen.params());
        stages.push(stats);
    }
    Ok(AdversarialOutcome {
        generator: gen,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::{blob_dataset, Stage};

    fn tiny() -> GeneratorConfig {
        GeneratorConfig {
            z_dim: 4,
            w_dim: 8,
            levels: 2,
            feature_dim: 6,
            ..Default::default()
        }
    }

    #[test]
    fn empty_dataset_is_an_argument_error() {
        let s = Schedule::parse("4:8x2").unwrap();
        let r = train_adversarial(&tiny(), &[], &s, &GanOptions::default(), 0);
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn stages_chain_the_generator() {
        let data = blob_dataset(4, 8, 0);
        let s = Schedule::new(vec![Stage::new(4, 12, 4), Stage::new(8, 8, 4)]).unwrap();
        let opts = GanOptions {
            disc_hidden: 8,
            ..Default::default()
        };
        let out = train_adversarial(&tiny(), &data, &s, &opts, 3).unwrap();
        assert_eq!(out.stages.len(), 2);
        assert_eq!(out.stages[0].steps, 3);
        assert_eq!(
            out.stages[1].start_fingerprint,
            out.stages[0].end_fingerprint
        );
        assert_eq!(out.stages[0].param_count, out.stages[1].param_count);
        assert_eq!(
            out.stages[1].end_fingerprint,
            fingerprint(out.generator.params())
        );
        assert!(!out.stages[0].r1.is_empty());
    }
}
