//! Homogeneous pixel-coordinate grids.
//!
//! A grid of `H × W` pixels is stored as an `(H·W) × 3` matrix whose rows are
//! `(x, y, 1)` in raster order (y outer, x inner). This is the transpose of
//! the usual `3 × HW` coordinate matrix, laid out so each pixel is one row of
//! the synthesis feature matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Axis-aligned rectangle in normalized image units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub const UNIT: Region = Region {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };

    /// `[-margin, 1 + margin]²`.
    pub fn expanded(margin: f64) -> Region {
        Region {
            x_min: -margin,
            x_max: 1.0 + margin,
            y_min: -margin,
            y_max: 1.0 + margin,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateGrid<T: Real = f32> {
    height: usize,
    width: usize,
    region: Region,
    points: Tensor<T>,
}

/// Coordinate of sample `i` out of `count` along `[lo, hi]`.
///
/// Evaluated as `(lo·(count−1) + i·(hi−lo)) / (count−1)` so that grids whose
/// samples fall on the same real coordinate round to the same float whenever
/// the numerator is exact (unit grids, dyadic margins).
fn axis_coord(lo: f64, hi: f64, i: usize, count: usize) -> f64 {
    if count == 1 {
        return lo;
    }
    let den = (count - 1) as f64;
    (lo * den + i as f64 * (hi - lo)) / den
}

impl<T: Real> CoordinateGrid<T> {
    pub fn new(height: usize, width: usize, region: Region) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::arg(format!(
                "grid dimensions must be positive, got {height}×{width}"
            )));
        }
        let ordered = region.x_min <= region.x_max && region.y_min <= region.y_max;
        let finite = [region.x_min, region.x_max, region.y_min, region.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !ordered || !finite {
            return Err(Error::arg(format!("invalid region {region:?}")));
        }
        let xs: Vec<T> = (0..width)
            .map(|c| T::from_f64_lossy(axis_coord(region.x_min, region.x_max, c, width)))
            .collect();
        let mut data = Vec::with_capacity(height * width * 3);
        for r in 0..height {
            let y = T::from_f64_lossy(axis_coord(region.y_min, region.y_max, r, height));
            for &x in &xs {
                data.extend_from_slice(&[x, y, T::one()]);
            }
        }
        let points = Tensor::new(vec![height * width, 3], data)?;
        Ok(CoordinateGrid {
            height,
            width,
            region,
            points,
        })
    }

    pub fn unit(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, Region::UNIT)
    }

    /// Unit grid of size `(f(H−1)+1) × (f(W−1)+1)` that contains the
    /// `H × W` unit grid at every `f`-th row and column.
    pub fn nested_dense(base_height: usize, base_width: usize, factor: usize) -> Result<Self> {
        if factor < 1 {
            return Err(Error::arg("upsampling factor must be at least 1"));
        }
        if base_height < 2 || base_width < 2 {
            return Err(Error::arg(format!(
                "nested grids need base dimensions ≥ 2, got {base_height}×{base_width}"
            )));
        }
        Self::unit(
            factor * (base_height - 1) + 1,
            factor * (base_width - 1) + 1,
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(H·W) × 3` matrix of `(x, y, 1)` rows.
    pub fn points(&self) -> &Tensor<T> {
        &self.points
    }

    pub fn point(&self, index: usize) -> [T; 3] {
        let d = &self.points.data()[index * 3..index * 3 + 3];
        [d[0], d[1], d[2]]
    }

    pub fn pixel_index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn pixel_position(&self, index: usize) -> (usize, usize) {
        (index / self.width, index % self.width)
    }

    /// Rows of the coordinate matrix for the given pixel indices.
    pub fn select(&self, indices: &[usize]) -> Result<Tensor<T>> {
        let mut data = Vec::with_capacity(indices.len() * 3);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::arg(format!(
                    "pixel {i} outside a grid of {} pixels",
                    self.len()
                )));
            }
            data.extend_from_slice(&self.point(i));
        }
        Tensor::new(vec![indices.len(), 3], data)
    }
}
