use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// RGB image with values nominally in `[-1, 1]`, raster ordered like the
/// coordinate grid (row-major, channels interleaved).
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer<T: Real = f32> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> ImageBuffer<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height * width * 3 != data.len() {
            return Err(Error::arg(format!(
                "{height}×{width}×3 image needs {} values, got {}",
                height * width * 3,
                data.len()
            )));
        }
        Ok(ImageBuffer {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [T; 3]) -> Self {
        let data = (0..height * width).flat_map(|_| rgb).collect();
        ImageBuffer {
            height,
            width,
            data,
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [T; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        ImageBuffer {
            height,
            width,
            data,
        }
    }

    /// Image from a `(H·W) × 3` matrix of pixel rows.
    pub fn from_pixels(height: usize, width: usize, pixels: Tensor<T>) -> Result<Self> {
        Self::new(height, width, pixels.into_data())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [T; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// `(H·W) × 3` view as a tensor.
    pub fn to_pixels(&self) -> Tensor<T> {
        Tensor::new(vec![self.height * self.width, 3], self.data.clone())
            .expect("consistent image shape")
    }

    pub fn cast<U: Real>(&self) -> ImageBuffer<U> {
        ImageBuffer {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        }
    }

    /// Sub-image taking every `stride`-th pixel starting at `(row0, col0)`.
    pub fn strided(
        &self,
        row0: usize,
        col0: usize,
        stride: usize,
        height: usize,
        width: usize,
    ) -> Result<Self> {
        if stride == 0
            || row0 + (height.max(1) - 1) * stride >= self.height
            || col0 + (width.max(1) - 1) * stride >= self.width
        {
            return Err(Error::arg("strided crop outside the image"));
        }
        Ok(Self::from_fn(height, width, |r, c| {
            self.pixel(row0 + r * stride, col0 + c * stride)
        }))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Per-channel `max − min` over all pixels.
    pub fn channel_ranges(&self) -> [T; 3] {
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for px in self.data.chunks_exact(3) {
            for ch in 0..3 {
                lo[ch] = lo[ch].min(px[ch]);
                hi[ch] = hi[ch].max(px[ch]);
            }
        }
        [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]
    }

    /// Bitwise comparison (distinguishes `-0.0` and NaN payloads).
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.dims() == other.dims()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_f64_lossy().to_bits() == b.to_f64_lossy().to_bits())
    }
}
