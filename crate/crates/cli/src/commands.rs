use std::path::{Path, PathBuf};
use std::time::Instant;

use polyinr::inversion::{invert, InversionConfig, ReconstructionLoss};
use polyinr::io::{self, RunConfig};
use polyinr::manipulation::{self, Endpoint, LevelSet};
use polyinr::training::{self, GanOptions, Schedule};
use polyinr::{AffineParams, CoordinateGrid, Error, Generator, GeneratorConfig, Result};

use crate::{Command, Common, Size, Source, Space};

fn arg(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

fn run_config(common: &Common) -> Result<Option<RunConfig>> {
    common.config.as_deref().map(RunConfig::load).transpose()
}

fn generator(common: &Common) -> Result<Generator<f32>> {
    match &common.ckpt {
        Some(p) => io::load_checkpoint(p),
        None => Err(arg("--ckpt is required for this command")),
    }
}

/// Generator configuration from `--config`, then `--ckpt`, then defaults.
fn generator_config(common: &Common) -> Result<GeneratorConfig> {
    if let Some(cfg) = run_config(common)? {
        return Ok(cfg.generator);
    }
    if let Some(p) = &common.ckpt {
        return Ok(io::load_checkpoint(p)?.config().clone());
    }
    Ok(GeneratorConfig::default())
}

fn out_path(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn affine_for(
    gen: &Generator<f32>,
    seed: u64,
    file: Option<&Path>,
    class: Option<usize>,
) -> Result<AffineParams<f32>> {
    match file {
        Some(p) => {
            let a = io::load_affine(p)?;
            a.check_matches(gen.config())?;
            Ok(a)
        }
        None => gen.affine_from_latent(&gen.random_latent(seed), class),
    }
}

fn source_affine(
    gen: &Generator<f32>,
    common: &Common,
    source: &Source,
) -> Result<AffineParams<f32>> {
    affine_for(gen, common.seed, source.affine.as_deref(), source.class)
}

fn save_png(path: &Path, img: &polyinr::ImageBuffer<f32>) -> Result<()> {
    io::export_image(path, img)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Params {
            common,
            depth,
            width,
            verbose,
        } => {
            let mut cfg = generator_config(&common)?;
            if let Some(d) = depth {
                cfg.levels = d;
            }
            if let Some(w) = width {
                cfg.feature_dim = w;
            }
            cfg.validate()?;
            if verbose {
                for (name, shape) in cfg.param_specs() {
                    println!("{name:<24} {shape:?}");
                }
            }
            let n = polyinr::count_params(&cfg);
            println!("{n} parameters ({:.2}M)", n as f64 / 1e6);
        }
        Command::Sample {
            common,
            source,
            save_affine,
        } => {
            let gen = generator(&common)?;
            let a = source_affine(&gen, &common, &source)?;
            let Size { height, width } = common.size;
            let img = gen.synthesize(&a, &CoordinateGrid::unit(height, width)?)?;
            save_png(&out_path(&common, "sample.png"), &img)?;
            if let Some(p) = save_affine {
                io::save_affine(&p, &a)?;
            }
        }
        Command::Fit {
            common,
            target,
            steps,
            lr,
            render,
            save_affine,
        } => {
            let cfg = generator_config(&common)?;
            let img = io::import_image(&target)?;
            let started = Instant::now();
            let fit = training::fit_single_image(&cfg, &img, steps, lr, common.seed)?;
            let out = fit.render()?;
            println!(
                "fit {} steps in {:.1}s: loss {:.3e} -> {:.3e}, psnr {:.2} dB",
                steps,
                started.elapsed().as_secs_f64(),
                fit.losses[0],
                fit.losses.last().copied().unwrap_or(f64::NAN),
                polyinr::metrics::psnr(&out, &img)?
            );
            let ckpt = out_path(&common, "fit.pinr");
            io::save_checkpoint(&ckpt, &fit.generator)?;
            println!("wrote {}", ckpt.display());
            if let Some(p) = render {
                save_png(&p, &out)?;
            }
            if let Some(p) = save_affine {
                let class = (cfg.num_classes > 0).then_some(0);
                io::save_affine(&p, &fit.generator.affine_from_latent(&fit.latent, class)?)?;
            }
        }
        Command::Train {
            common,
            data,
            schedule,
            disc_hidden,
        } => {
            let rc = run_config(&common)?;
            let cfg = rc.as_ref().map(|c| c.generator.clone()).unwrap_or_default();
            let schedule = match (schedule, rc.as_ref().and_then(|c| c.schedule.clone())) {
                (Some(text), _) => Schedule::parse(&text)?,
                (None, Some(s)) => s,
                (None, None) => {
                    return Err(arg(
                        "a schedule is required (--schedule or the config file)",
                    ))
                }
            };
            let images: Vec<_> = io::load_png_dir(&data)?
                .into_iter()
                .map(|(_, img)| img)
                .collect();
            println!("{} images from {}", images.len(), data.display());
            let options = GanOptions {
                disc_hidden,
                ..Default::default()
            };
            let started = Instant::now();
            let outcome =
                training::train_adversarial(&cfg, &images, &schedule, &options, common.seed)?;
            for s in &outcome.stages {
                let tail = s.accuracy.len().saturating_sub(100);
                let acc = s.accuracy[tail..].iter().sum::<f64>()
                    / (s.accuracy.len() - tail).max(1) as f64;
                println!(
                    "{0}x{0}: {1} steps, final d_loss {2:.4}, g_loss {3:.4}, recent accuracy {4:.3}",
                    s.resolution,
                    s.steps,
                    s.d_loss.last().copied().unwrap_or(f64::NAN),
                    s.g_loss.last().copied().unwrap_or(f64::NAN),
                    acc
                );
            }
            println!("trained in {:.1}s", started.elapsed().as_secs_f64());
            let ckpt = common
                .out
                .clone()
                .or_else(|| rc.and_then(|c| c.outputs.checkpoint))
                .unwrap_or_else(|| PathBuf::from("generator.pinr"));
            io::save_checkpoint(&ckpt, &outcome.generator)?;
            println!("wrote {}", ckpt.display());
        }
        Command::Interpolate {
            common,
            space,
            frames,
            seed_b,
            affine_a,
            affine_b,
            class,
        } => {
            let gen = generator(&common)?;
            if frames == 0 {
                return Err(arg("--frames must be at least 1"));
            }
            let (a, b) = match space {
                Space::Latent => {
                    if affine_a.is_some() || affine_b.is_some() {
                        return Err(arg("affine files require --space affine"));
                    }
                    (
                        Endpoint::Latent(gen.random_latent(common.seed)),
                        Endpoint::Latent(gen.random_latent(seed_b)),
                    )
                }
                Space::Affine => (
                    Endpoint::Affine(affine_for(&gen, common.seed, affine_a.as_deref(), class)?),
                    Endpoint::Affine(affine_for(&gen, seed_b, affine_b.as_deref(), class)?),
                ),
            };
            let dir = out_path(&common, "frames");
            std::fs::create_dir_all(&dir)?;
            let Size { height, width } = common.size;
            for i in 0..frames {
                let t = if frames == 1 {
                    0.0
                } else {
                    i as f64 / (frames - 1) as f64
                };
                let img = manipulation::interpolate(&gen, &a, &b, t, class, height, width)?;
                save_png(&dir.join(format!("frame_{i:04}.png")), &img)?;
            }
        }
        Command::Stylemix {
            common,
            levels,
            seed_b,
            affine_a,
            affine_b,
            class,
        } => {
            let gen = generator(&common)?;
            let set = LevelSet::parse(&levels)?;
            let a = affine_for(&gen, common.seed, affine_a.as_deref(), class)?;
            let b = affine_for(&gen, seed_b, affine_b.as_deref(), class)?;
            let Size { height, width } = common.size;
            let img = manipulation::style_mix(&gen, &a, &b, &set, height, width)?;
            save_png(&out_path(&common, "stylemix.png"), &img)?;
        }
        Command::Extrapolate {
            common,
            source,
            margin,
        } => {
            let gen = generator(&common)?;
            let a = source_affine(&gen, &common, &source)?;
            let Size { height, width } = common.size;
            let img = manipulation::extrapolate(&gen, &a, margin, height, width)?;
            save_png(&out_path(&common, "extrapolate.png"), &img)?;
        }
        Command::Upsample {
            common,
            source,
            factor,
            mode,
        } => {
            let gen = generator(&common)?;
            let a = source_affine(&gen, &common, &source)?;
            let Size { height, width } = common.size;
            let img = manipulation::upsample_render(&gen, &a, height, width, factor, mode)?;
            save_png(&out_path(&common, "upsample.png"), &img)?;
        }
        Command::Heatmap {
            common,
            source,
            level,
        } => {
            let gen = generator(&common)?;
            let a = source_affine(&gen, &common, &source)?;
            let Size { height, width } = common.size;
            let map =
                manipulation::heatmap(&gen, &a, &CoordinateGrid::unit(height, width)?, level)?;
            save_png(&out_path(&common, "heatmap.png"), &map.to_image())?;
        }
        Command::Invert {
            common,
            target,
            steps,
            lr,
            gradient_loss,
            render,
        } => {
            let gen = generator(&common)?;
            let img = io::import_image(&target)?;
            let mut cfg = run_config(&common)?
                .and_then(|c| c.inversion)
                .unwrap_or_default();
            cfg.steps = steps.unwrap_or(cfg.steps);
            cfg.lr = lr.unwrap_or(cfg.lr);
            cfg.seed = common.seed;
            if gradient_loss {
                cfg.loss = ReconstructionLoss::MseGradient;
            }
            if cfg.log_every == 0 {
                cfg.log_every = (cfg.steps / 10).max(1);
            }
            let result = run_inversion(&gen, &img, &cfg)?;
            println!(
                "psnr {:.2} dB (initial {:.2} dB), ssim {:.4}",
                result.psnr, result.initial_psnr, result.ssim
            );
            let path = out_path(&common, "inverted.affine");
            io::save_affine(&path, &result.affine)?;
            println!("wrote {}", path.display());
            if let Some(p) = render {
                let grid = CoordinateGrid::unit(img.height(), img.width())?;
                save_png(&p, &gen.synthesize(&result.affine, &grid)?)?;
            }
        }
        Command::Bench {
            common,
            resolutions,
            repeats,
        } => {
            let gen = match &common.ckpt {
                Some(p) => io::load_checkpoint(p)?,
                None => Generator::init(&generator_config(&common)?, common.seed)?,
            };
            if repeats == 0 {
                return Err(arg("--repeats must be at least 1"));
            }
            let class = (gen.config().num_classes > 0).then_some(0);
            let z = gen.random_latent(common.seed);
            println!("{} parameters", gen.num_params());
            println!("{:>10}  {:>14}", "resolution", "sec/image");
            for part in resolutions
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
            {
                let res: usize = part
                    .parse()
                    .map_err(|_| arg(format!("bad resolution {part:?}")))?;
                let started = Instant::now();
                for _ in 0..repeats {
                    gen.sample(&z, class, res, res)?;
                }
                let per = started.elapsed().as_secs_f64() / repeats as f64;
                println!("{:>10}  {:>14.4}", format!("{res}x{res}"), per);
            }
        }
    }
    Ok(())
}

fn run_inversion(
    gen: &Generator<f32>,
    img: &polyinr::ImageBuffer<f32>,
    cfg: &InversionConfig,
) -> Result<polyinr::inversion::InversionResult<f32>> {
    invert(gen, img, cfg, |step, loss| {
        eprintln!("step {step:>6}  loss {loss:.4e}")
    })
}
