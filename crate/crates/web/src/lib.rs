//! WebAssembly bindings for a single-page demo: sampling with boundary
//! extrapolation, level-wise style mixing and per-level heat maps.
//!
//! Every render returns RGBA bytes ready for `ImageData`.

use polyinr::generator::AffineParams;
use polyinr::io;
use polyinr::manipulation::{self, LevelSet};
use polyinr::{CoordinateGrid, Generator, GeneratorConfig, ImageBuffer, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wasm_bindgen::prelude::*;

fn js(e: polyinr::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn rgba(img: &ImageBuffer<f32>) -> Vec<u8> {
    img.data()
        .chunks_exact(3)
        .flat_map(|p| {
            [
                io::to_u8(p[0].into()),
                io::to_u8(p[1].into()),
                io::to_u8(p[2].into()),
                255,
            ]
        })
        .collect()
}

/// Affine matrices drawn straight from a normal distribution. Used when no
/// trained checkpoint is loaded, since an untrained mapping network yields
/// nearly flat images.
fn normal_affine(levels: usize, n: usize, seed: u32) -> AffineParams<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from(seed));
    let dist = Normal::new(0.0f32, 0.8).expect("positive std");
    let levels = (0..levels)
        .map(|_| {
            Tensor::new(
                vec![n, 3],
                (0..n * 3).map(|_| dist.sample(&mut rng)).collect(),
            )
            .expect("shape")
        })
        .collect();
    AffineParams::new(levels).expect("consistent levels")
}

#[wasm_bindgen]
pub struct Demo {
    gen: Generator<f32>,
    trained: bool,
}

#[wasm_bindgen]
impl Demo {
    /// Untrained generator with a few levels, seeded.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsError> {
        let cfg = GeneratorConfig {
            z_dim: 16,
            w_dim: 64,
            levels: 6,
            feature_dim: 32,
            ..Default::default()
        };
        let gen = Generator::init(&cfg, u64::from(seed)).map_err(js)?;
        Ok(Demo {
            gen,
            trained: false,
        })
    }

    /// Generator from the bytes of a checkpoint file.
    #[wasm_bindgen(js_name = fromCheckpoint)]
    pub fn from_checkpoint(bytes: &[u8]) -> Result<Demo, JsError> {
        let gen = io::generator_from_bytes(bytes).map_err(js)?;
        Ok(Demo { gen, trained: true })
    }

    pub fn levels(&self) -> usize {
        self.gen.config().levels
    }

    #[wasm_bindgen(js_name = paramCount)]
    pub fn param_count(&self) -> usize {
        self.gen.num_params()
    }

    pub fn trained(&self) -> bool {
        self.trained
    }

    fn affine(&self, seed: u32) -> Result<AffineParams<f32>, JsError> {
        if self.trained {
            let class = (self.gen.config().num_classes > 0).then_some(0);
            self.gen
                .affine_from_latent(&self.gen.random_latent(u64::from(seed)), class)
                .map_err(js)
        } else {
            Ok(normal_affine(
                self.gen.config().levels,
                self.gen.config().feature_dim,
                seed,
            ))
        }
    }

    /// `size × size` render over `[−margin, 1 + margin]²`.
    pub fn sample(&self, seed: u32, size: usize, margin: f64) -> Result<Vec<u8>, JsError> {
        let a = self.affine(seed)?;
        Ok(rgba(
            &manipulation::extrapolate(&self.gen, &a, margin, size, size).map_err(js)?,
        ))
    }

    /// Levels in `levels` (for example `"0-2"` or `"1,4"`) come from `seed_a`,
    /// the rest from `seed_b`.
    #[wasm_bindgen(js_name = styleMix)]
    pub fn style_mix(
        &self,
        seed_a: u32,
        seed_b: u32,
        levels: &str,
        size: usize,
    ) -> Result<Vec<u8>, JsError> {
        let set = LevelSet::parse(levels).map_err(js)?;
        let (a, b) = (self.affine(seed_a)?, self.affine(seed_b)?);
        Ok(rgba(
            &manipulation::style_mix(&self.gen, &a, &b, &set, size, size).map_err(js)?,
        ))
    }

    pub fn heatmap(&self, seed: u32, level: usize, size: usize) -> Result<Vec<u8>, JsError> {
        let a = self.affine(seed)?;
        let grid = CoordinateGrid::unit(size, size).map_err(js)?;
        let map = manipulation::heatmap(&self.gen, &a, &grid, level).map_err(js)?;
        Ok(rgba(&map.to_image()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_are_rgba_of_the_requested_size() {
        let d = Demo::new(1).unwrap();
        assert_eq!(d.sample(3, 8, 0.25).unwrap().len(), 8 * 8 * 4);
        assert_eq!(d.style_mix(1, 2, "0-2", 6).unwrap().len(), 6 * 6 * 4);
        let heat = d.heatmap(3, 2, 5).unwrap();
        assert_eq!(heat.len(), 5 * 5 * 4);
        assert!(heat
            .chunks_exact(4)
            .all(|p| p[3] == 255 && p[0] == p[1] && p[1] == p[2]));
    }

    #[test]
    fn untrained_demo_is_not_flat() {
        let d = Demo::new(2).unwrap();
        let px = d.sample(4, 16, 0.0).unwrap();
        let reds: Vec<u8> = px.chunks_exact(4).map(|p| p[0]).collect();
        assert!(reds.iter().max().unwrap() - reds.iter().min().unwrap() > 20);
    }

    #[test]
    fn checkpoint_bytes_load() {
        let d = Demo::new(5).unwrap();
        let bytes = io::generator_to_bytes(&d.gen);
        let loaded = Demo::from_checkpoint(&bytes).unwrap();
        assert!(loaded.trained());
        assert_eq!(loaded.param_count(), d.param_count());
        assert_eq!(loaded.sample(1, 4, 0.0).unwrap().len(), 64);
    }
}
