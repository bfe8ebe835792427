//! Fits a small generator to a synthetic image, then writes the fit, a
//! 2× super-sampled render and a boundary extrapolation as PNG files.

use polyinr::manipulation::{self, UpsampleMode};
use polyinr::training::fit_single_image;
use polyinr::{io, metrics, GeneratorConfig, ImageBuffer};

fn main() -> polyinr::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| ".".into());
    let target = ImageBuffer::<f32>::from_fn(32, 32, |r, c| {
        let (x, y) = (c as f32 / 31.0 - 0.5, r as f32 / 31.0 - 0.5);
        let d = (x * x + y * y).sqrt();
        [1.0 - 2.5 * d, (6.0 * x).sin() * 0.8, 2.0 * d - 0.6]
    });
    let cfg = GeneratorConfig {
        z_dim: 16,
        w_dim: 64,
        levels: 6,
        feature_dim: 48,
        ..Default::default()
    };
    let fit = fit_single_image(&cfg, &target, 600, 1e-3, 0)?;
    let render = fit.render()?;
    println!(
        "psnr {:.2} dB, ssim {:.4}",
        metrics::psnr(&render, &target)?,
        metrics::ssim(&render, &target)?
    );

    let affine = fit.generator.affine_from_latent(&fit.latent, None)?;
    let dense =
        manipulation::upsample_render(&fit.generator, &affine, 32, 32, 2, UpsampleMode::Nested)?;
    let wide = manipulation::extrapolate(&fit.generator, &affine, 0.25, 49, 49)?;
    for (name, img) in [
        ("target", &target),
        ("fit", &render),
        ("upsampled", &dense),
        ("extrapolated", &wide),
    ] {
        let path = std::path::Path::new(&out).join(format!("{name}.png"));
        io::export_image(&path, img)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
