//! Polynomial implicit-representation image generator.
//!
//! The generator maps a latent code to per-level affine matrices and then
//! evaluates, independently at every pixel, a network built only from
//! linear maps, leaky rectifiers and element-wise products with the
//! affine-transformed pixel coordinates. Each product raises the polynomial
//! order of the represented image by one.

pub mod error;
pub mod generator;
pub mod grid;
pub mod image;
pub mod inversion;
pub mod io;
pub mod manipulation;
pub mod metrics;
pub mod tensor;
pub mod training;

pub use error::{Error, FormatError, Result};
pub use generator::{count_params, random_latent, AffineParams, Generator, GeneratorConfig};
pub use grid::{CoordinateGrid, Region};
pub use image::ImageBuffer;
pub use tensor::{gradcheck, Gradients, Real, Tape, Tensor, Var};
