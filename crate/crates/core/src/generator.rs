//! The polynomial generator.
//!
//! A two-layer mapping network turns `z` (and an optional class embedding)
//! into `w`. One linear head per level turns `w` into an `n × 3` affine
//! matrix `A_i`. Synthesis then runs, for every pixel `X = (x, y, 1)`:
//!
//! ```text
//! F_0 = σ(W_0 (A_0 X))
//! F_i = σ(W_i ((A_i X) ⊙ F_{i−1}))      i = 1..L−1
//! rgb = W_rgb F_{L−1}
//! ```
//!
//! Pixels never interact, so any subset of a grid can be rendered on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CoordinateGrid;
use crate::image::ImageBuffer;
use crate::tensor::{Real, Tape, Tensor, Var};

/// Pixels rendered per tape when synthesizing large grids.
const RENDER_CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub z_dim: usize,
    pub w_dim: usize,
    pub levels: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
    pub class_embed_dim: usize,
    pub leaky_slope: f64,
    pub test_identity_activation: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            z_dim: 64,
            w_dim: 512,
            levels: 10,
            feature_dim: 512,
            num_classes: 0,
            class_embed_dim: 512,
            leaky_slope: 0.2,
            test_identity_activation: false,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::arg("levels must be at least 1"));
        }
        if self.z_dim < 1 || self.w_dim < 1 || self.feature_dim < 1 {
            return Err(Error::arg(
                "z_dim, w_dim and feature_dim must be at least 1",
            ));
        }
        if self.num_classes > 0 && self.class_embed_dim < 1 {
            return Err(Error::arg(
                "class_embed_dim must be at least 1 for a conditional model",
            ));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::arg(format!(
                "leaky_slope {} outside (0, 1)",
                self.leaky_slope
            )));
        }
        Ok(())
    }

    fn mapping_input_dim(&self) -> usize {
        if self.num_classes > 0 {
            self.z_dim + self.class_embed_dim
        } else {
            self.z_dim
        }
    }

    /// Name and shape of every parameter array in canonical order.
    pub fn param_specs(&self) -> Vec<(String, Vec<usize>)> {
        let n = self.feature_dim;
        let mut specs = Vec::new();
        if self.num_classes > 0 {
            specs.push((
                "class_embedding".to_string(),
                vec![self.num_classes, self.class_embed_dim],
            ));
        }
        let mut linear = |name: String, out: usize, inp: usize| {
            specs.push((format!("{name}.weight"), vec![out, inp]));
            specs.push((format!("{name}.bias"), vec![out]));
        };
        linear("mapping.0".into(), self.w_dim, self.mapping_input_dim());
        linear("mapping.1".into(), self.w_dim, self.w_dim);
        for i in 0..self.levels {
            linear(format!("affine_head.{i}"), 3 * n, self.w_dim);
            linear(format!("synthesis.{i}"), n, n);
        }
        linear("rgb_head".into(), 3, n);
        specs
    }
}

/// Number of scalars a generator with this configuration allocates.
pub fn count_params(config: &GeneratorConfig) -> usize {
    config
        .param_specs()
        .iter()
        .map(|(_, shape)| shape.iter().product::<usize>())
        .sum()
}

/// Per-level `n × 3` affine matrices; columns hold the `x`, `y` and bias
/// coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineParams<T: Real = f32> {
    levels: Vec<Tensor<T>>,
}

impl<T: Real> AffineParams<T> {
    pub fn new(levels: Vec<Tensor<T>>) -> Result<Self> {
        let n = levels
            .first()
            .map(|t| t.shape()[0])
            .ok_or_else(|| Error::arg("no levels"))?;
        if levels.iter().any(|t| t.shape() != [n, 3]) {
            return Err(Error::arg(
                "every affine level must be n × 3 with the same n",
            ));
        }
        Ok(AffineParams { levels })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.levels[0].shape()[0]
    }

    pub fn level(&self, i: usize) -> &Tensor<T> {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[Tensor<T>] {
        &self.levels
    }

    pub fn levels_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.levels
    }

    pub fn into_levels(self) -> Vec<Tensor<T>> {
        self.levels
    }

    pub fn check_matches(&self, config: &GeneratorConfig) -> Result<()> {
        if self.num_levels() != config.levels || self.feature_dim() != config.feature_dim {
            return Err(Error::arg(format!(
                "affine params have {} levels × n={}, generator expects {} × n={}",
                self.num_levels(),
                self.feature_dim(),
                config.levels,
                config.feature_dim
            )));
        }
        Ok(())
    }

    /// Copy with the `x` and `y` coefficient columns set to zero.
    pub fn without_coordinates(&self) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|t| {
                let mut t = t.clone();
                for row in t.data_mut().chunks_exact_mut(3) {
                    row[0] = T::zero();
                    row[1] = T::zero();
                }
                t
            })
            .collect();
        AffineParams { levels }
    }

    /// Level-wise `(1 − t)·a + t·b`.
    pub fn lerp(a: &Self, b: &Self, t: T) -> Result<Self> {
        if a.num_levels() != b.num_levels() || a.feature_dim() != b.feature_dim() {
            return Err(Error::arg(
                "cannot interpolate affine params of different shapes",
            ));
        }
        let s = T::one() - t;
        let levels = a
            .levels
            .iter()
            .zip(&b.levels)
            .map(|(x, y)| {
                let data = x
                    .data()
                    .iter()
                    .zip(y.data())
                    .map(|(&p, &q)| s * p + t * q)
                    .collect();
                Tensor::new(x.shape().to_vec(), data).expect("same shape")
            })
            .collect();
        Ok(AffineParams { levels })
    }

    pub fn cast<U: Real>(&self) -> AffineParams<U> {
        AffineParams {
            levels: self.levels.iter().map(Tensor::cast).collect(),
        }
    }
}

/// Tape handles for a generator's parameters, in canonical order.
#[derive(Clone, Debug)]
pub struct GeneratorVars {
    pub params: Vec<Var>,
}

/// Outputs of a synthesis pass recorded on a tape.
pub struct SynthesisVars {
    /// `P × n` feature matrix after every level.
    pub features: Vec<Var>,
    /// `P × 3` colors.
    pub rgb: Var,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator<T: Real = f32> {
    config: GeneratorConfig,
    params: Vec<Tensor<T>>,
}

impl<T: Real> Generator<T> {
    /// Seeded initialization. Linear weights are `Normal(0, 1/√fan_in)`;
    /// affine heads start near the constant-image regime (small weights,
    /// zero `x`/`y` bias, standard-normal bias in the constant column).
    pub fn init(config: &GeneratorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for (name, shape) in config.param_specs() {
            let numel: usize = shape.iter().product();
            let mut normal = |std: f64| -> Vec<T> {
                let dist = Normal::new(0.0, std).expect("positive std");
                (0..numel)
                    .map(|_| T::from_f64_lossy(dist.sample(&mut rng)))
                    .collect()
            };
            let data = if name == "class_embedding" {
                normal(1.0)
            } else if name.starts_with("affine_head.") && name.ends_with(".weight") {
                normal(0.01 / (config.w_dim as f64).sqrt())
            } else if name.starts_with("affine_head.") {
                let mut bias = normal(1.0);
                for (j, v) in bias.iter_mut().enumerate() {
                    if j % 3 != 2 {
                        *v = T::zero();
                    }
                }
                bias
            } else if name.ends_with(".weight") {
                normal(1.0 / (shape[1] as f64).sqrt())
            } else {
                vec![T::zero(); numel]
            };
            params.push(Tensor::new(shape, data)?);
        }
        Ok(Generator {
            config: config.clone(),
            params,
        })
    }

    /// Rebuilds a generator from arrays in canonical order.
    pub fn from_params(config: GeneratorConfig, params: Vec<Tensor<T>>) -> Result<Self> {
        config.validate()?;
        let specs = config.param_specs();
        if specs.len() != params.len() {
            return Err(Error::arg(format!(
                "expected {} parameter arrays, got {}",
                specs.len(),
                params.len()
            )));
        }
        for ((name, shape), p) in specs.iter().zip(&params) {
            if p.shape() != shape.as_slice() {
                return Err(Error::arg(format!(
                    "{name}: shape {:?}, expected {shape:?}",
                    p.shape()
                )));
            }
        }
        Ok(Generator { config, params })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn named_params(&self) -> impl Iterator<Item = (String, &Tensor<T>)> {
        self.config
            .param_specs()
            .into_iter()
            .map(|(n, _)| n)
            .zip(&self.params)
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(Tensor::numel).sum()
    }

    pub fn cast<U: Real>(&self) -> Generator<U> {
        Generator {
            config: self.config.clone(),
            params: self.params.iter().map(Tensor::cast).collect(),
        }
    }

    fn class_offset(&self) -> usize {
        usize::from(self.config.num_classes > 0)
    }

    fn mapping_index(&self, layer: usize) -> usize {
        self.class_offset() + 2 * layer
    }

    fn affine_index(&self, level: usize) -> usize {
        self.class_offset() + 4 + 4 * level
    }

    fn synthesis_index(&self, level: usize) -> usize {
        self.affine_index(level) + 2
    }

    fn rgb_index(&self) -> usize {
        self.class_offset() + 4 + 4 * self.config.levels
    }

    fn slope(&self) -> T {
        T::from_f64_lossy(self.config.leaky_slope)
    }

    fn activate(&self, tape: &mut Tape<T>, x: Var) -> Result<Var> {
        if self.config.test_identity_activation {
            Ok(x)
        } else {
            tape.leaky_relu(x, self.slope())
        }
    }

    /// Records every parameter as a leaf.
    pub fn register(&self, tape: &mut Tape<T>, trainable: bool) -> GeneratorVars {
        GeneratorVars {
            params: self
                .params
                .iter()
                .map(|p| tape.leaf(p.clone(), trainable))
                .collect(),
        }
    }

    fn linear(
        &self,
        tape: &mut Tape<T>,
        vars: &GeneratorVars,
        index: usize,
        x: Var,
    ) -> Result<Var> {
        tape.linear(x, vars.params[index], vars.params[index + 1])
    }

    /// Mapping network on a `B × z_dim` batch of latents.
    pub fn mapping_graph(
        &self,
        tape: &mut Tape<T>,
        vars: &GeneratorVars,
        z: Var,
        classes: Option<&[usize]>,
    ) -> Result<Var> {
        let batch = tape.value(z).dims2().0;
        let input = match (self.config.num_classes, classes) {
            (0, None) => z,
            (0, Some(_)) => return Err(Error::arg("class id given to an unconditional generator")),
            (_, None) => return Err(Error::arg("conditional generator needs a class id")),
            (k, Some(ids)) => {
                if ids.len() != batch {
                    return Err(Error::arg(format!(
                        "{} class ids for a batch of {batch}",
                        ids.len()
                    )));
                }
                if let Some(bad) = ids.iter().find(|&&c| c >= k) {
                    return Err(Error::arg(format!(
                        "class {bad} out of range for {k} classes"
                    )));
                }
                let embed = tape.gather_rows(vars.params[0], ids.to_vec())?;
                tape.concat_cols(z, embed)?
            }
        };
        let h = self.linear(tape, vars, self.mapping_index(0), input)?;
        let h = self.activate(tape, h)?;
        self.linear(tape, vars, self.mapping_index(1), h)
    }

    /// Affine matrices for every row of a `B × w_dim` batch: `result[b][level]`.
    pub fn affine_graph(
        &self,
        tape: &mut Tape<T>,
        vars: &GeneratorVars,
        w: Var,
    ) -> Result<Vec<Vec<Var>>> {
        let batch = tape.value(w).dims2().0;
        let n = self.config.feature_dim;
        let mut heads = Vec::with_capacity(self.config.levels);
        for level in 0..self.config.levels {
            heads.push(self.linear(tape, vars, self.affine_index(level), w)?);
        }
        let mut out = Vec::with_capacity(batch);
        for b in 0..batch {
            let mut levels = Vec::with_capacity(self.config.levels);
            for &head in &heads {
                let row = if batch == 1 {
                    head
                } else {
                    tape.gather_rows(head, vec![b])?
                };
                levels.push(tape.reshape(row, vec![n, 3])?);
            }
            out.push(levels);
        }
        Ok(out)
    }

    /// Synthesis network on a `P × 3` matrix of homogeneous coordinates.
    pub fn synthesis_graph(
        &self,
        tape: &mut Tape<T>,
        vars: &GeneratorVars,
        affine: &[Var],
        coords: Var,
    ) -> Result<SynthesisVars> {
        if affine.len() != self.config.levels {
            return Err(Error::arg(format!(
                "{} affine levels for a {}-level generator",
                affine.len(),
                self.config.levels
            )));
        }
        let mut features = Vec::with_capacity(self.config.levels);
        let mut prev: Option<Var> = None;
        for (level, &a) in affine.iter().enumerate() {
            let ax = tape.matmul_t(coords, a)?;
            let input = match prev {
                None => ax,
                Some(f) => tape.mul(ax, f)?,
            };
            let h = self.linear(tape, vars, self.synthesis_index(level), input)?;
            let f = self.activate(tape, h)?;
            features.push(f);
            prev = Some(f);
        }
        let last = prev.expect("at least one level");
        let rgb = self.linear(tape, vars, self.rgb_index(), last)?;
        Ok(SynthesisVars { features, rgb })
    }

    /// `z → w`.
    pub fn map_latent(&self, z: &[T], class_id: Option<usize>) -> Result<Vec<T>> {
        if z.len() != self.config.z_dim {
            return Err(Error::arg(format!(
                "latent has length {}, expected {}",
                z.len(),
                self.config.z_dim
            )));
        }
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let zv = tape.constant(Tensor::row(z.to_vec()));
        let ids = class_id.map(|c| [c]);
        let w = self.mapping_graph(&mut tape, &vars, zv, ids.as_ref().map(|c| c.as_slice()))?;
        Ok(tape.value(w).data().to_vec())
    }

    /// `w → (A_0, …, A_{L−1})`.
    pub fn affine_from_w(&self, w: &[T]) -> Result<AffineParams<T>> {
        if w.len() != self.config.w_dim {
            return Err(Error::arg(format!(
                "w has length {}, expected {}",
                w.len(),
                self.config.w_dim
            )));
        }
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let wv = tape.constant(Tensor::row(w.to_vec()));
        let levels = self.affine_graph(&mut tape, &vars, wv)?.remove(0);
        AffineParams::new(levels.iter().map(|&v| tape.value(v).clone()).collect())
    }

    fn render_chunks<F>(
        &self,
        affine: &AffineParams<T>,
        points: &Tensor<T>,
        width: usize,
        mut pick: F,
    ) -> Result<Tensor<T>>
    where
        F: FnMut(&Tape<T>, &SynthesisVars) -> Var,
    {
        affine.check_matches(&self.config)?;
        let (rows, cols) = points.dims2();
        if points.shape().len() != 2 || cols != 3 {
            return Err(Error::arg(format!(
                "coordinates must be P × 3, got {:?}",
                points.shape()
            )));
        }
        let mut out = Vec::with_capacity(rows * width);
        for start in (0..rows).step_by(RENDER_CHUNK) {
            let end = (start + RENDER_CHUNK).min(rows);
            let chunk = Tensor::new(
                vec![end - start, 3],
                points.data()[start * 3..end * 3].to_vec(),
            )?;
            let mut tape = Tape::new();
            let vars = self.register(&mut tape, false);
            let a: Vec<Var> = affine
                .levels()
                .iter()
                .map(|m| tape.constant(m.clone()))
                .collect();
            let c = tape.constant(chunk);
            let syn = self.synthesis_graph(&mut tape, &vars, &a, c)?;
            let v = pick(&tape, &syn);
            out.extend_from_slice(tape.value(v).data());
        }
        Tensor::new(vec![rows, width], out)
    }

    /// Colors at arbitrary coordinate rows (`P × 3` in, `P × 3` out).
    pub fn synthesize_points(
        &self,
        affine: &AffineParams<T>,
        points: &Tensor<T>,
    ) -> Result<Tensor<T>> {
        self.render_chunks(affine, points, 3, |_, s| s.rgb)
    }

    pub fn synthesize(
        &self,
        affine: &AffineParams<T>,
        grid: &CoordinateGrid<T>,
    ) -> Result<ImageBuffer<T>> {
        let px = self.synthesize_points(affine, grid.points())?;
        ImageBuffer::from_pixels(grid.height(), grid.width(), px)
    }

    /// `F_level` over the grid, shape `(H·W) × n`.
    pub fn level_features(
        &self,
        affine: &AffineParams<T>,
        grid: &CoordinateGrid<T>,
        level: usize,
    ) -> Result<Tensor<T>> {
        if level >= self.config.levels {
            return Err(Error::arg(format!(
                "level {level} out of range for {} levels",
                self.config.levels
            )));
        }
        self.render_chunks(affine, grid.points(), self.config.feature_dim, |_, s| {
            s.features[level]
        })
    }

    /// Applies the RGB head to a `P × n` feature matrix.
    pub fn rgb_from_features(&self, features: &Tensor<T>) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let f = tape.constant(features.clone());
        let y = self.linear(&mut tape, &vars, self.rgb_index(), f)?;
        Ok(tape.value(y).clone())
    }

    pub fn affine_from_latent(&self, z: &[T], class_id: Option<usize>) -> Result<AffineParams<T>> {
        let w = self.map_latent(z, class_id)?;
        self.affine_from_w(&w)
    }

    /// Full pipeline on the unit grid.
    pub fn sample(
        &self,
        z: &[T],
        class_id: Option<usize>,
        height: usize,
        width: usize,
    ) -> Result<ImageBuffer<T>> {
        let affine = self.affine_from_latent(z, class_id)?;
        let grid = CoordinateGrid::unit(height, width)?;
        self.synthesize(&affine, &grid)
    }

    /// Standard-normal latent drawn from a seed.
    pub fn random_latent(&self, seed: u64) -> Vec<T> {
        random_latent(self.config.z_dim, seed)
    }
}

/// Standard-normal vector of length `dim` drawn from `seed`.
pub fn random_latent<T: Real>(dim: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..dim)
        .map(|_| T::from_f64_lossy(normal.sample(&mut rng)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            z_dim: 4,
            w_dim: 8,
            levels: 3,
            feature_dim: 5,
            class_embed_dim: 8,
            ..Default::default()
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = Generator::<f32>::init(&small(), 7).unwrap();
        let b = Generator::<f32>::init(&small(), 7).unwrap();
        assert_eq!(a, b);
        let c = Generator::<f32>::init(&small(), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_levels_rejected() {
        let cfg = GeneratorConfig {
            levels: 0,
            ..small()
        };
        assert!(matches!(
            Generator::<f32>::init(&cfg, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn count_matches_allocation() {
        for cfg in [
            small(),
            GeneratorConfig {
                num_classes: 3,
                ..small()
            },
            GeneratorConfig::default(),
        ] {
            let g = Generator::<f32>::init(&cfg, 1).unwrap();
            assert_eq!(g.num_params(), count_params(&cfg));
        }
    }

    #[test]
    fn tiny_config_count_by_enumeration() {
        // levels=1, n=2, z=2, w=4, no classes:
        // mapping.0 4×2+4, mapping.1 4×4+4, affine_head.0 6×4+6,
        // synthesis.0 2×2+2, rgb_head 3×2+3
        let cfg = GeneratorConfig {
            z_dim: 2,
            w_dim: 4,
            levels: 1,
            feature_dim: 2,
            ..Default::default()
        };
        let expected = (8 + 4) + (16 + 4) + (24 + 6) + (4 + 2) + (6 + 3);
        assert_eq!(count_params(&cfg), expected);
        assert_eq!(expected, 77);
    }

    #[test]
    fn default_latent_maps_to_512() {
        let g = Generator::<f32>::init(
            &GeneratorConfig {
                levels: 1,
                feature_dim: 4,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        let z = g.random_latent(3);
        let w = g.map_latent(&z, None).unwrap();
        assert_eq!(w.len(), 512);
        assert_eq!(w, g.map_latent(&z, None).unwrap());
        assert!(g.map_latent(&z[..63], None).is_err());
    }

    #[test]
    fn class_validation() {
        let cfg = GeneratorConfig {
            num_classes: 2,
            ..small()
        };
        let g = Generator::<f32>::init(&cfg, 0).unwrap();
        let z = g.random_latent(0);
        assert!(g.map_latent(&z, Some(1)).is_ok());
        assert!(g.map_latent(&z, Some(2)).is_err());
        assert!(g.map_latent(&z, None).is_err());
        let uncond = Generator::<f32>::init(&small(), 0).unwrap();
        assert!(uncond.map_latent(&z, Some(0)).is_err());
    }

    #[test]
    fn affine_shapes_and_zero_w() {
        let g = Generator::<f64>::init(&small(), 3).unwrap();
        let a = g.affine_from_w(&[0.0; 8]).unwrap();
        assert_eq!(a.num_levels(), 3);
        for i in 0..3 {
            assert_eq!(a.level(i).shape(), &[5, 3]);
            let bias = &g.params()[g.affine_index(i) + 1];
            assert_eq!(a.level(i).data(), bias.data());
        }
        assert!(g.affine_from_w(&[0.0; 7]).is_err());
    }

    #[test]
    fn constant_image_when_coordinates_ignored() {
        let g = Generator::<f32>::init(&small(), 5).unwrap();
        let a = g
            .affine_from_latent(&g.random_latent(1), None)
            .unwrap()
            .without_coordinates();
        let img = g
            .synthesize(&a, &CoordinateGrid::unit(6, 7).unwrap())
            .unwrap();
        assert_eq!(img.channel_ranges(), [0.0; 3]);
    }

    #[test]
    fn level_features_shape_and_rgb_consistency() {
        let g = Generator::<f32>::init(&small(), 2).unwrap();
        let a = g.affine_from_latent(&g.random_latent(4), None).unwrap();
        let grid = CoordinateGrid::unit(4, 3).unwrap();
        let f = g.level_features(&a, &grid, 2).unwrap();
        assert_eq!(f.shape(), &[12, 5]);
        let rgb = g.rgb_from_features(&f).unwrap();
        let img = g.synthesize(&a, &grid).unwrap();
        assert_eq!(rgb.data(), img.data());
        assert!(g.level_features(&a, &grid, 3).is_err());
    }

    #[test]
    fn sample_is_the_three_step_pipeline() {
        let g = Generator::<f32>::init(&small(), 9).unwrap();
        let z = g.random_latent(11);
        let img = g.sample(&z, None, 5, 4).unwrap();
        assert_eq!(img.dims(), (5, 4));
        let w = g.map_latent(&z, None).unwrap();
        let a = g.affine_from_w(&w).unwrap();
        let manual = g
            .synthesize(&a, &CoordinateGrid::unit(5, 4).unwrap())
            .unwrap();
        assert!(img.bit_eq(&manual));
        let big = g.sample(&z, None, 64, 64).unwrap();
        assert_eq!(big.dims(), (64, 64));
        assert!(big.is_finite());
    }

    #[test]
    fn mismatched_affine_rejected() {
        let g = Generator::<f32>::init(&small(), 0).unwrap();
        let other = Generator::<f32>::init(
            &GeneratorConfig {
                levels: 2,
                ..small()
            },
            0,
        )
        .unwrap();
        let a = other
            .affine_from_latent(&other.random_latent(0), None)
            .unwrap();
        assert!(g
            .synthesize(&a, &CoordinateGrid::unit(2, 2).unwrap())
            .is_err());
    }

    #[test]
    fn chunked_render_matches_single_chunk() {
        let g = Generator::<f32>::init(&small(), 4).unwrap();
        let a = g.affine_from_latent(&g.random_latent(2), None).unwrap();
        let grid = CoordinateGrid::unit(70, 70).unwrap(); // 4900 px > one chunk
        let full = g.synthesize(&a, &grid).unwrap();
        let tail: Vec<usize> = (4090..4900).collect();
        let sub = g
            .synthesize_points(&a, &grid.select(&tail).unwrap())
            .unwrap();
        assert_eq!(sub.data(), &full.data()[4090 * 3..]);
    }
}
