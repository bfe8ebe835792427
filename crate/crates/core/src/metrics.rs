//! Image quality scores on the `[0, 1]` display range.
//!
//! Generator images live in `[-1, 1]`; they are mapped with `(v + 1) / 2`
//! and clamped, the same mapping used when exporting to PNG.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::tensor::Real;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

const SSIM_C1: f64 = 1e-4;
const SSIM_C2: f64 = 9e-4;

fn to_unit<T: Real>(img: &ImageBuffer<T>) -> Vec<f64> {
    img.data()
        .iter()
        .map(|v| ((v.to_f64_lossy() + 1.0) / 2.0).clamp(0.0, 1.0))
        .collect()
}

fn check_shapes<T: Real>(a: &ImageBuffer<T>, b: &ImageBuffer<T>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::arg(format!(
            "image shapes differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// `10·log10(1 / MSE)` for data already on `[0, 1]`, capped at 99 dB.
pub fn psnr_unit(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::arg(
            "psnr needs two non-empty buffers of equal length",
        ));
    }
    let mse = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// Global-window SSIM for single-channel data on `[0, 1]`.
pub fn ssim_unit(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::arg(
            "ssim needs two non-empty buffers of equal length",
        ));
    }
    let n = a.len() as f64;
    let (mu_a, mu_b) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    let mut cov = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mu_a, y - mu_b);
        var_a += dx * dx;
        var_b += dy * dy;
        cov += dx * dy;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    let num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2);
    let den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2);
    Ok(num / den)
}

/// Mean squared error in raw buffer units.
pub fn mse<T: Real>(a: &ImageBuffer<T>, b: &ImageBuffer<T>) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = x.to_f64_lossy() - y.to_f64_lossy();
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

pub fn psnr<T: Real>(a: &ImageBuffer<T>, b: &ImageBuffer<T>) -> Result<f64> {
    check_shapes(a, b)?;
    psnr_unit(&to_unit(a), &to_unit(b))
}

/// SSIM on the channel-mean grayscale of both images.
pub fn ssim<T: Real>(a: &ImageBuffer<T>, b: &ImageBuffer<T>) -> Result<f64> {
    check_shapes(a, b)?;
    let gray = |img: &ImageBuffer<T>| -> Vec<f64> {
        to_unit(img)
            .chunks_exact(3)
            .map(|p| (p[0] + p[1] + p[2]) / 3.0)
            .collect()
    };
    ssim_unit(&gray(a), &gray(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Buffer value whose display value is `u`.
    fn from_unit(u: f64) -> f64 {
        2.0 * u - 1.0
    }

    fn ramp(h: usize, w: usize) -> ImageBuffer<f64> {
        ImageBuffer::from_fn(h, w, |r, c| {
            let u = 0.9 * (r * w + c) as f64 / (h * w) as f64;
            [from_unit(u), from_unit(0.9 - u), from_unit(0.45)]
        })
    }

    #[test]
    fn identical_images_hit_the_cap() {
        let a = ramp(4, 5);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn offset_of_one_tenth_is_twenty_db() {
        let a: Vec<f64> = (0..300).map(|i| 0.9 * i as f64 / 300.0).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 0.1).collect();
        assert!((psnr_unit(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn constant_images_ssim() {
        let a = vec![0.3; 16];
        let b = vec![0.7; 16];
        let expected = (2.0 * 0.3 * 0.7 + 1e-4) / (0.3f64 * 0.3 + 0.7 * 0.7 + 1e-4);
        let s = ssim_unit(&a, &b).unwrap();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.7242).abs() < 5e-4);
    }

    #[test]
    fn shape_mismatch() {
        assert!(psnr(&ramp(2, 2), &ramp(2, 3)).is_err());
        assert!(ssim(&ramp(2, 2), &ramp(3, 2)).is_err());
    }

    proptest! {
        #[test]
        fn symmetric(seed in 0u64..1000) {
            let a = ramp(3, 4);
            let b = ImageBuffer::from_fn(3, 4, |r, c| {
                let v = ((seed as usize * 31 + r * 7 + c * 13) % 17) as f64 / 17.0;
                [from_unit(v), from_unit(1.0 - v), from_unit(v * v)]
            });
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
            prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-15);
            prop_assert!(ssim(&a, &b).unwrap() <= 1.0);
        }

        #[test]
        fn psnr_falls_with_noise(amp in 0.01f64..0.2) {
            let base: Vec<f64> = (0..200).map(|i| 0.3 + 0.4 * ((i * 37) % 101) as f64 / 101.0).collect();
            let noise: Vec<f64> = (0..200).map(|i| (((i * 7919) % 1000) as f64 / 1000.0) - 0.5).collect();
            let noisy = |a: f64| -> Vec<f64> { base.iter().zip(&noise).map(|(b, n)| b + a * n).collect() };
            let p1 = psnr_unit(&base, &noisy(amp)).unwrap();
            let p2 = psnr_unit(&base, &noisy(amp * 1.5)).unwrap();
            prop_assert!(p2 < p1);
        }
    }
}
