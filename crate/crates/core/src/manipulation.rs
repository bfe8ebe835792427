//! Grid and affine-space manipulations of a trained generator.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::generator::{AffineParams, Generator};
use crate::grid::{CoordinateGrid, Region};
use crate::image::ImageBuffer;
use crate::tensor::{Real, Tensor};

/// End point of an interpolation: a latent code or a set of affine matrices.
#[derive(Clone, Debug, PartialEq)]
pub enum Endpoint<T: Real = f32> {
    Latent(Vec<T>),
    Affine(AffineParams<T>),
}

/// Renders `(1−t)·A + t·B` at `height × width`. Latent endpoints are mixed
/// before the mapping network (sharing `class_id`); affine endpoints are
/// mixed level by level. The end points themselves are rendered unmixed.
pub fn interpolate<T: Real>(
    gen: &Generator<T>,
    a: &Endpoint<T>,
    b: &Endpoint<T>,
    t: f64,
    class_id: Option<usize>,
    height: usize,
    width: usize,
) -> Result<ImageBuffer<T>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::arg(format!(
            "interpolation weight {t} outside [0, 1]"
        )));
    }
    let tt = T::from_f64_lossy(t);
    let affine = match (a, b) {
        (Endpoint::Latent(za), Endpoint::Latent(zb)) => {
            if za.len() != zb.len() {
                return Err(Error::arg("latent endpoints differ in length"));
            }
            let z: Vec<T> = if t == 0.0 {
                za.clone()
            } else if t == 1.0 {
                zb.clone()
            } else {
                let s = T::one() - tt;
                za.iter().zip(zb).map(|(&p, &q)| s * p + tt * q).collect()
            };
            gen.affine_from_latent(&z, class_id)?
        }
        (Endpoint::Affine(aa), Endpoint::Affine(ab)) => {
            aa.check_matches(gen.config())?;
            ab.check_matches(gen.config())?;
            match t {
                0.0 => aa.clone(),
                1.0 => ab.clone(),
                _ => AffineParams::lerp(aa, ab, tt)?,
            }
        }
        _ => {
            return Err(Error::arg(
                "interpolation endpoints must both be latents or both be affine params",
            ))
        }
    };
    gen.synthesize(&affine, &CoordinateGrid::unit(height, width)?)
}

/// Set of synthesis levels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LevelSet(BTreeSet<usize>);

impl LevelSet {
    pub fn new(levels: impl IntoIterator<Item = usize>) -> Self {
        LevelSet(levels.into_iter().collect())
    }

    pub fn all(levels: usize) -> Self {
        LevelSet((0..levels).collect())
    }

    /// Parses `"5-9"` (inclusive) or `"1,3,5"`, or a mix such as `"0-2,7"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut set = BTreeSet::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let num = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::arg(format!("bad level {s:?} in {text:?}")))
            };
            match part.split_once('-') {
                Some((lo, hi)) => {
                    let (lo, hi) = (num(lo)?, num(hi)?);
                    if lo > hi {
                        return Err(Error::arg(format!("empty level range {part:?}")));
                    }
                    set.extend(lo..=hi);
                }
                None => {
                    set.insert(num(part)?);
                }
            }
        }
        Ok(LevelSet(set))
    }

    pub fn contains(&self, level: usize) -> bool {
        self.0.contains(&level)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn complement(&self, levels: usize) -> Self {
        LevelSet((0..levels).filter(|l| !self.0.contains(l)).collect())
    }

    pub fn validate(&self, levels: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l >= levels) {
            Some(l) => Err(Error::arg(format!(
                "level {l} out of range for {levels} levels"
            ))),
            None => Ok(()),
        }
    }
}

/// `B` with `A_i` substituted at every level in `levels`.
pub fn mix_affine<T: Real>(
    a: &AffineParams<T>,
    b: &AffineParams<T>,
    levels: &LevelSet,
) -> Result<AffineParams<T>> {
    if a.num_levels() != b.num_levels() || a.feature_dim() != b.feature_dim() {
        return Err(Error::arg("cannot mix affine params of different shapes"));
    }
    levels.validate(a.num_levels())?;
    let mixed = (0..b.num_levels())
        .map(|i| {
            if levels.contains(i) {
                a.level(i).clone()
            } else {
                b.level(i).clone()
            }
        })
        .collect();
    AffineParams::new(mixed)
}

pub fn style_mix<T: Real>(
    gen: &Generator<T>,
    a: &AffineParams<T>,
    b: &AffineParams<T>,
    levels: &LevelSet,
    height: usize,
    width: usize,
) -> Result<ImageBuffer<T>> {
    a.check_matches(gen.config())?;
    b.check_matches(gen.config())?;
    let mixed = mix_affine(a, b, levels)?;
    gen.synthesize(&mixed, &CoordinateGrid::unit(height, width)?)
}

/// Renders on `[−margin, 1 + margin]²`.
pub fn extrapolate<T: Real>(
    gen: &Generator<T>,
    affine: &AffineParams<T>,
    margin: f64,
    height: usize,
    width: usize,
) -> Result<ImageBuffer<T>> {
    if !margin.is_finite() || margin < 0.0 {
        return Err(Error::arg(format!(
            "margin must be a non-negative number, got {margin}"
        )));
    }
    gen.synthesize(
        affine,
        &CoordinateGrid::new(height, width, Region::expanded(margin))?,
    )
}

/// Size of an extrapolated axis whose samples include every sample of a
/// `unit_size` unit axis, if one exists for this margin.
pub fn aligned_extrapolation_size(unit_size: usize, margin: f64) -> Option<usize> {
    if unit_size < 2 || margin.is_nan() || margin < 0.0 {
        return None;
    }
    let steps = (unit_size - 1) as f64;
    let pad = margin * steps;
    if pad.fract() != 0.0 {
        return None;
    }
    Some(unit_size + 2 * pad as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpsampleMode {
    /// `f(H−1)+1` samples per axis; contains the base grid exactly.
    Nested,
    /// `fH` samples per axis spanning `[0, 1]`.
    Standard,
}

impl std::str::FromStr for UpsampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nested" => Ok(UpsampleMode::Nested),
            "standard" => Ok(UpsampleMode::Standard),
            _ => Err(Error::arg(format!("unknown upsample mode {s:?}"))),
        }
    }
}

pub fn upsample_render<T: Real>(
    gen: &Generator<T>,
    affine: &AffineParams<T>,
    base_height: usize,
    base_width: usize,
    factor: usize,
    mode: UpsampleMode,
) -> Result<ImageBuffer<T>> {
    if factor < 1 {
        return Err(Error::arg("upsampling factor must be at least 1"));
    }
    let grid = match mode {
        UpsampleMode::Nested => CoordinateGrid::nested_dense(base_height, base_width, factor)?,
        UpsampleMode::Standard => CoordinateGrid::unit(factor * base_height, factor * base_width)?,
    };
    gen.synthesize(affine, &grid)
}

/// Single-channel map normalized to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl HeatMap {
    /// Gray image in generator units (`0 → −1`, `1 → 1`).
    pub fn to_image(&self) -> ImageBuffer<f32> {
        ImageBuffer::from_fn(self.height, self.width, |r, c| {
            let v = (2.0 * self.values[r * self.width + c] - 1.0) as f32;
            [v, v, v]
        })
    }
}

/// Weights every channel of a `P × n` feature matrix by its spatial mean,
/// sums over channels and min-max normalizes (all zeros when flat).
pub fn heatmap_from_features<T: Real>(
    features: &Tensor<T>,
    height: usize,
    width: usize,
) -> Result<HeatMap> {
    let (pixels, channels) = features.dims2();
    if pixels != height * width || pixels == 0 {
        return Err(Error::arg(format!(
            "{pixels} feature rows for a {height}×{width} map"
        )));
    }
    let data = features.data();
    let mut weights = vec![0.0f64; channels];
    for row in data.chunks_exact(channels) {
        for (w, v) in weights.iter_mut().zip(row) {
            *w += v.to_f64_lossy();
        }
    }
    weights.iter_mut().for_each(|w| *w /= pixels as f64);
    let raw: Vec<f64> = data
        .chunks_exact(channels)
        .map(|row| {
            row.iter()
                .zip(&weights)
                .map(|(v, w)| v.to_f64_lossy() * w)
                .sum()
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let values = if hi > lo {
        raw.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; raw.len()]
    };
    Ok(HeatMap {
        height,
        width,
        values,
    })
}

pub fn heatmap<T: Real>(
    gen: &Generator<T>,
    affine: &AffineParams<T>,
    grid: &CoordinateGrid<T>,
    level: usize,
) -> Result<HeatMap> {
    let features = gen.level_features(affine, grid, level)?;
    heatmap_from_features(&features, grid.height(), grid.width())
}
