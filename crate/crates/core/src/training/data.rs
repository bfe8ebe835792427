use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::tensor::Real;

/// Box-filter resampling: each output pixel is the area-weighted mean of the
/// source pixels it covers. Integer downscale factors reduce to block means.
pub fn resize_area<T: Real>(
    img: &ImageBuffer<T>,
    height: usize,
    width: usize,
) -> Result<ImageBuffer<T>> {
    if height == 0 || width == 0 {
        return Err(Error::arg("target size must be positive"));
    }
    let (sh, sw) = img.dims();
    if (sh, sw) == (height, width) {
        return Ok(img.clone());
    }
    let spans = |src: usize, dst: usize| -> Vec<Vec<(usize, f64)>> {
        let scale = src as f64 / dst as f64;
        (0..dst)
            .map(|o| {
                let (lo, hi) = (o as f64 * scale, (o + 1) as f64 * scale);
                let mut taps = Vec::new();
                let mut i = lo.floor() as usize;
                while (i as f64) < hi && i < src {
                    let overlap = (hi.min((i + 1) as f64) - lo.max(i as f64)).max(0.0);
                    if overlap > 0.0 {
                        taps.push((i, overlap / scale));
                    }
                    i += 1;
                }
                taps
            })
            .collect()
    };
    let rows = spans(sh, height);
    let cols = spans(sw, width);
    Ok(ImageBuffer::from_fn(height, width, |r, c| {
        let mut acc = [0.0f64; 3];
        for &(sr, wr) in &rows[r] {
            for &(sc, wc) in &cols[c] {
                let p = img.pixel(sr, sc);
                for ch in 0..3 {
                    acc[ch] += wr * wc * p[ch].to_f64_lossy();
                }
            }
        }
        acc.map(T::from_f64_lossy)
    }))
}

/// Synthetic dataset of soft colored blobs on a dark background.
pub fn blob_dataset(count: usize, size: usize, seed: u64) -> Vec<ImageBuffer<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let cx: f64 = rng.random_range(0.25..0.75);
            let cy: f64 = rng.random_range(0.25..0.75);
            let sigma: f64 = rng.random_range(0.1..0.25);
            let color: [f64; 3] = [
                rng.random_range(-0.2..1.0),
                rng.random_range(-0.2..1.0),
                rng.random_range(-0.2..1.0),
            ];
            let denom = (size.max(2) - 1) as f64;
            ImageBuffer::from_fn(size, size, |r, c| {
                let (x, y) = (c as f64 / denom, r as f64 / denom);
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                let k = (-d2 / (2.0 * sigma * sigma)).exp();
                color.map(|col| (-0.8 + k * (col + 0.8)) as f32)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_downscale_is_block_mean() {
        let img = ImageBuffer::<f64>::from_fn(4, 4, |r, c| [(r * 4 + c) as f64, 1.0, -1.0]);
        let small = resize_area(&img, 2, 2).unwrap();
        // top-left block: 0, 1, 4, 5
        assert_eq!(small.pixel(0, 0), [2.5, 1.0, -1.0]);
        assert_eq!(small.pixel(1, 1), [12.5, 1.0, -1.0]);
    }

    #[test]
    fn fractional_downscale_preserves_mean() {
        let img = ImageBuffer::<f64>::from_fn(5, 7, |r, c| [(r * c) as f64, r as f64, c as f64]);
        let small = resize_area(&img, 3, 2).unwrap();
        let mean = |im: &ImageBuffer<f64>| {
            im.data().iter().step_by(3).sum::<f64>() / (im.height() * im.width()) as f64
        };
        assert!((mean(&img) - mean(&small)).abs() < 1e-12);
    }

    #[test]
    fn blobs_are_seeded_and_in_range() {
        let a = blob_dataset(4, 8, 1);
        assert_eq!(a, blob_dataset(4, 8, 1));
        assert!(a
            .iter()
            .all(|im| im.data().iter().all(|v| (-1.0..=1.0).contains(v))));
    }
}
