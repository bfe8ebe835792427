//! Recovering affine parameters that reproduce a given image with the
//! generator weights held fixed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{AffineParams, Generator};
use crate::grid::CoordinateGrid;
use crate::image::ImageBuffer;
use crate::metrics;
use crate::tensor::{Real, Tape, Tensor, Var};
use crate::training::{AdamConfig, AdamState};

/// Starting point of the optimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InversionInit {
    /// Affine parameters of the mean mapped latent over `mean_samples` draws.
    MeanAffine,
    /// Affine parameters of one latent drawn from this seed.
    FromZ(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionLoss {
    Mse,
    /// MSE plus MSE between horizontal and vertical forward differences.
    MseGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionConfig {
    pub steps: usize,
    pub lr: f64,
    pub init: InversionInit,
    pub loss: ReconstructionLoss,
    pub gradient_weight: f64,
    pub mean_samples: usize,
    pub seed: u64,
    pub class_id: Option<usize>,
    /// Progress callback interval for front ends; `0` disables it.
    pub log_every: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            steps: 1000,
            lr: 0.01,
            init: InversionInit::MeanAffine,
            loss: ReconstructionLoss::Mse,
            gradient_weight: 1.0,
            mean_samples: 1000,
            seed: 0,
            class_id: None,
            log_every: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InversionResult<T: Real = f32> {
    /// Affine parameters with the lowest loss seen.
    pub affine: AffineParams<T>,
    /// Loss at the start of every step.
    pub losses: Vec<f64>,
    pub initial_psnr: f64,
    pub psnr: f64,
    pub ssim: f64,
}

impl<T: Real> InversionResult<T> {
    /// Running minimum of [`Self::losses`].
    pub fn best_so_far(&self) -> Vec<f64> {
        self.losses
            .iter()
            .scan(f64::INFINITY, |best, &l| {
                *best = best.min(l);
                Some(*best)
            })
            .collect()
    }
}

/// Initial affine parameters for `init`.
pub fn initial_affine<T: Real>(
    gen: &Generator<T>,
    config: &InversionConfig,
) -> Result<AffineParams<T>> {
    match config.init {
        InversionInit::FromZ(seed) => {
            gen.affine_from_latent(&gen.random_latent(seed), config.class_id)
        }
        InversionInit::MeanAffine => {
            if config.mean_samples == 0 {
                return Err(Error::arg("mean_samples must be at least 1"));
            }
            // the affine heads are linear in w, so the mean affine is the affine of the mean w
            let mut acc = vec![0.0f64; gen.config().w_dim];
            for i in 0..config.mean_samples {
                let z = gen.random_latent(config.seed.wrapping_add(i as u64));
                for (a, v) in acc.iter_mut().zip(gen.map_latent(&z, config.class_id)?) {
                    *a += v.to_f64_lossy();
                }
            }
            let n = config.mean_samples as f64;
            let w: Vec<T> = acc.iter().map(|a| T::from_f64_lossy(a / n)).collect();
            gen.affine_from_w(&w)
        }
    }
}

struct Differences {
    right: Vec<usize>,
    left: Vec<usize>,
    down: Vec<usize>,
    up: Vec<usize>,
}

impl Differences {
    fn new(h: usize, w: usize) -> Self {
        let mut d = Differences {
            right: vec![],
            left: vec![],
            down: vec![],
            up: vec![],
        };
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if c + 1 < w {
                    d.right.push(i + 1);
                    d.left.push(i);
                }
                if r + 1 < h {
                    d.down.push(i + w);
                    d.up.push(i);
                }
            }
        }
        d
    }

    fn graph<T: Real>(&self, tape: &mut Tape<T>, img: Var) -> Result<(Var, Var)> {
        let r = tape.gather_rows(img, self.right.clone())?;
        let l = tape.gather_rows(img, self.left.clone())?;
        let d = tape.gather_rows(img, self.down.clone())?;
        let u = tape.gather_rows(img, self.up.clone())?;
        Ok((tape.sub(r, l)?, tape.sub(d, u)?))
    }
}

/// Optimizes only the affine parameters so the unit-grid render matches
/// `target`. The generator is borrowed immutably and never modified.
pub fn invert<T: Real>(
    gen: &Generator<T>,
    target: &ImageBuffer<T>,
    config: &InversionConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<InversionResult<T>> {
    let (h, w) = target.dims();
    if h < 2 || w < 2 {
        return Err(Error::arg("target must be at least 2×2"));
    }
    if !target.is_finite() {
        return Err(Error::arg("target contains non-finite values"));
    }
    if config.lr.is_nan() || config.lr <= 0.0 {
        return Err(Error::arg("learning rate must be positive"));
    }
    let grid = CoordinateGrid::<T>::unit(h, w)?;
    let init = initial_affine(gen, config)?;
    let initial_psnr = metrics::psnr(&gen.synthesize(&init, &grid)?, target)?;
    let target_px = target.to_pixels();
    let diffs = (config.loss == ReconstructionLoss::MseGradient).then(|| Differences::new(h, w));
    let weight = T::from_f64_lossy(config.gradient_weight);

    let mut levels = init.clone().into_levels();
    let mut opt = AdamState::new(AdamConfig::standard(config.lr), &levels);
    let mut losses = Vec::with_capacity(config.steps);
    let mut best = (f64::INFINITY, init);

    for step in 0..config.steps {
        let mut tape = Tape::new();
        let vars = gen.register(&mut tape, false);
        let a: Vec<Var> = levels.iter().map(|m| tape.param(m.clone())).collect();
        let coords = tape.constant(grid.points().clone());
        let syn = gen.synthesis_graph(&mut tape, &vars, &a, coords)?;
        let tgt = tape.constant(target_px.clone());
        let mut loss = tape.mse(syn.rgb, tgt)?;
        if let Some(d) = &diffs {
            let (px, py) = d.graph(&mut tape, syn.rgb)?;
            let (tx, ty) = d.graph(&mut tape, tgt)?;
            let ex = tape.mse(px, tx)?;
            let ey = tape.mse(py, ty)?;
            let e = tape.add(ex, ey)?;
            let e = tape.scale(e, weight)?;
            loss = tape.add(loss, e)?;
        }
        let value = tape.value(loss).data()[0].to_f64_lossy();
        if !value.is_finite() {
            return Err(Error::Training(format!(
                "inversion loss became non-finite at step {step}"
            )));
        }
        losses.push(value);
        if value < best.0 {
            best = (value, AffineParams::new(levels.clone())?);
        }
        if config.log_every > 0 && step % config.log_every == 0 {
            progress(step, value);
        }
        let grads = tape.backward(loss)?;
        let g: Vec<&Tensor<T>> = a.iter().map(|&v| grads.get(v)).collect();
        opt.update(&mut levels, &g, &|i| format!("affine.{i}"))?;
    }

    let affine = best.1;
    let render = gen.synthesize(&affine, &grid)?;
    Ok(InversionResult {
        psnr: metrics::psnr(&render, target)?,
        ssim: metrics::ssim(&render, target)?,
        affine,
        losses,
        initial_psnr,
    })
}
