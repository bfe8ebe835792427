mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Train, sample and manipulate polynomial implicit-representation generators.
#[derive(Parser, Debug)]
#[command(name = "polyinr", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Image size written as `HxW` (or a single number for square images).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Size {
    pub height: usize,
    pub width: usize,
}

impl std::str::FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad size {s:?}, expected HxW"))
        };
        let (h, w) = match s.split_once(['x', 'X']) {
            Some((h, w)) => (num(h)?, num(w)?),
            None => (num(s)?, num(s)?),
        };
        if h < 1 || w < 1 {
            return Err(format!("size {s:?} must be positive"));
        }
        Ok(Size {
            height: h,
            width: w,
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Generator checkpoint.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (or directory for multi-frame output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "64x64")]
    pub size: Size,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Where one set of affine parameters comes from: a saved affine file, or
/// the latent drawn from `--seed` (with `--class` for conditional models).
#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Affine parameter file to use instead of a latent seed.
    #[arg(long)]
    pub affine: Option<PathBuf>,
    #[arg(long)]
    pub class: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the parameter count of a configuration or checkpoint.
    Params {
        #[command(flatten)]
        common: Common,
        /// Override the number of synthesis levels.
        #[arg(long)]
        depth: Option<usize>,
        /// Override the feature width.
        #[arg(long)]
        width: Option<usize>,
        /// List every parameter array.
        #[arg(long)]
        verbose: bool,
    },
    /// Render one sample.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        /// Also save the affine parameters of the sample.
        #[arg(long)]
        save_affine: Option<PathBuf>,
    },
    /// Fit a fresh generator to a single image.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Target PNG.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        /// Write the final render here.
        #[arg(long)]
        render: Option<PathBuf>,
        /// Write the affine parameters of the fitted latent here.
        #[arg(long)]
        save_affine: Option<PathBuf>,
    },
    /// Progressive adversarial training on a directory of PNG files.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Stages as `RES:IMAGESxBATCH`, comma separated.
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long, default_value_t = 128)]
        disc_hidden: usize,
    },
    /// Render frames between two endpoints.
    Interpolate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "latent")]
        space: Space,
        #[arg(long, default_value_t = 8)]
        frames: usize,
        /// Seed of the second endpoint.
        #[arg(long, default_value_t = 1)]
        seed_b: u64,
        /// Affine file of the first endpoint (affine space only).
        #[arg(long)]
        affine_a: Option<PathBuf>,
        /// Affine file of the second endpoint (affine space only).
        #[arg(long)]
        affine_b: Option<PathBuf>,
        #[arg(long)]
        class: Option<usize>,
    },
    /// Take the levels in `--levels` from A and the rest from B.
    Stylemix {
        #[command(flatten)]
        common: Common,
        /// Inclusive range (`5-9`) or comma list (`1,3,5`).
        #[arg(long)]
        levels: String,
        #[arg(long, default_value_t = 1)]
        seed_b: u64,
        #[arg(long)]
        affine_a: Option<PathBuf>,
        #[arg(long)]
        affine_b: Option<PathBuf>,
        #[arg(long)]
        class: Option<usize>,
    },
    /// Render beyond the unit square.
    Extrapolate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0.25)]
        margin: f64,
    },
    /// Render on a denser grid (`--size` is the base size).
    Upsample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 2)]
        factor: usize,
        #[arg(long, default_value = "nested")]
        mode: polyinr::manipulation::UpsampleMode,
    },
    /// Channel-weighted activation map of one level.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        level: usize,
    },
    /// Recover affine parameters that reproduce an image.
    Invert {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Add the image-gradient term to the loss.
        #[arg(long)]
        gradient_loss: bool,
        /// Write the reconstruction here.
        #[arg(long)]
        render: Option<PathBuf>,
    },
    /// Seconds per rendered image across resolutions.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "32,64,128,256")]
        resolutions: String,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Space {
    Latent,
    Affine,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
