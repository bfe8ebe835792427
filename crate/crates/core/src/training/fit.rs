use super::adam::{AdamConfig, AdamState};
use crate::error::{Error, Result};
use crate::generator::{Generator, GeneratorConfig};
use crate::grid::CoordinateGrid;
use crate::image::ImageBuffer;
use crate::tensor::{Real, Tape, Var};

/// Result of fitting a generator to a single image.
pub struct FitOutcome<T: Real = f32> {
    /// Parameters with the lowest loss seen during the run.
    pub generator: Generator<T>,
    /// Loss evaluated at the start of every step.
    pub losses: Vec<f64>,
    /// Latent the image is rendered from.
    pub latent: Vec<T>,
    pub dims: (usize, usize),
}

impl<T: Real> FitOutcome<T> {
    pub fn render(&self) -> Result<ImageBuffer<T>> {
        let class = (self.generator.config().num_classes > 0).then_some(0);
        let (h, w) = self.dims;
        self.generator.sample(&self.latent, class, h, w)
    }
}

/// Trains every generator parameter so that the unit-grid render of a fixed
/// latent matches `target` in mean squared error.
pub fn fit_single_image<T: Real>(
    config: &GeneratorConfig,
    target: &ImageBuffer<T>,
    steps: usize,
    lr: f64,
    seed: u64,
) -> Result<FitOutcome<T>> {
    fit_single_image_with(config, target, steps, AdamConfig::standard(lr), seed)
}

pub fn fit_single_image_with<T: Real>(
    config: &GeneratorConfig,
    target: &ImageBuffer<T>,
    steps: usize,
    adam: AdamConfig,
    seed: u64,
) -> Result<FitOutcome<T>> {
    if steps == 0 {
        return Err(Error::arg("steps must be at least 1"));
    }
    let (h, w) = target.dims();
    if h < 2 || w < 2 {
        return Err(Error::arg("target must be at least 2×2"));
    }
    if !target.is_finite() {
        return Err(Error::arg("target contains non-finite values"));
    }
    let mut gen = Generator::<T>::init(config, seed)?;
    let latent = gen.random_latent(seed.wrapping_add(0x5eed));
    let class = (config.num_classes > 0).then_some(vec![0usize]);
    let grid = CoordinateGrid::<T>::unit(h, w)?;
    let target_px = target.to_pixels();
    let names: Vec<String> = config.param_specs().into_iter().map(|(n, _)| n).collect();
    let mut opt = AdamState::new(adam, gen.params());

    let mut losses = Vec::with_capacity(steps);
    let mut best: Option<(f64, Generator<T>)> = None;
    for step in 0..steps {
        let mut tape = Tape::new();
        let vars = gen.register(&mut tape, true);
        let z = tape.constant(crate::Tensor::row(latent.clone()));
        let wv = gen.mapping_graph(&mut tape, &vars, z, class.as_deref())?;
        let affine: Vec<Var> = gen.affine_graph(&mut tape, &vars, wv)?.remove(0);
        let coords = tape.constant(grid.points().clone());
        let syn = gen.synthesis_graph(&mut tape, &vars, &affine, coords)?;
        let tgt = tape.constant(target_px.clone());
        let loss = tape.mse(syn.rgb, tgt)?;
        let value = tape.value(loss).data()[0].to_f64_lossy();
        if !value.is_finite() {
            return Err(Error::Training(format!("non-finite loss at step {step}")));
        }
        losses.push(value);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, gen.clone()));
        }
        let grads = tape.backward(loss)?;
        let g: Vec<_> = vars.params.iter().map(|&v| grads.get(v)).collect();
        opt.update(gen.params_mut(), &g, &|i| names[i].clone())?;
    }

    // the final update has not been scored yet
    let final_loss = {
        let img = gen.sample(&latent, class.as_ref().map(|c| c[0]), h, w)?;
        crate::metrics::mse(&img, target)?
    };
    if final_loss.is_finite() && best.as_ref().is_none_or(|(b, _)| final_loss < *b) {
        best = Some((final_loss, gen));
    }
    let generator = best.expect("at least one step").1;
    Ok(FitOutcome {
        generator,
        losses,
        latent,
        dims: (h, w),
    })
}
