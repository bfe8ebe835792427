use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GENERATOR_LR: f64 = 1e-4;
pub const DEFAULT_DISCRIMINATOR_LR: f64 = 2e-4;

/// One resolution of progressive training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub resolution: usize,
    /// Number of real images shown to the discriminator.
    pub images: usize,
    pub batch_size: usize,
    #[serde(default = "default_g_lr")]
    pub generator_lr: f64,
    #[serde(default = "default_d_lr")]
    pub discriminator_lr: f64,
}

fn default_g_lr() -> f64 {
    DEFAULT_GENERATOR_LR
}

fn default_d_lr() -> f64 {
    DEFAULT_DISCRIMINATOR_LR
}

impl Stage {
    pub fn new(resolution: usize, images: usize, batch_size: usize) -> Self {
        Stage {
            resolution,
            images,
            batch_size,
            generator_lr: DEFAULT_GENERATOR_LR,
            discriminator_lr: DEFAULT_DISCRIMINATOR_LR,
        }
    }

    /// Optimizer steps needed to show `images` images.
    pub fn steps(&self) -> usize {
        self.images.div_ceil(self.batch_size)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    pub stages: Vec<Stage>,
}

impl Schedule {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        let s = Schedule { stages };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::arg("schedule has no stages"));
        }
        for (i, st) in self.stages.iter().enumerate() {
            if st.resolution < 2 || st.images == 0 || st.batch_size == 0 {
                return Err(Error::arg(format!(
                    "stage {i}: resolution ≥ 2, images > 0 and batch > 0 required"
                )));
            }
            if !(st.generator_lr > 0.0 && st.discriminator_lr > 0.0) {
                return Err(Error::arg(format!(
                    "stage {i}: learning rates must be positive"
                )));
            }
        }
        if self
            .stages
            .windows(2)
            .any(|w| w[1].resolution <= w[0].resolution)
        {
            return Err(Error::arg("stage resolutions must be strictly increasing"));
        }
        Ok(())
    }

    /// Parses `"16:1000x32,32:500x16"` (resolution:images x batch).
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |part: &str| {
            Error::arg(format!(
                "bad schedule stage {part:?}, expected RES:IMAGESxBATCH"
            ))
        };
        let stages = text
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|part| {
                let (res, rest) = part.split_once(':').ok_or_else(|| bad(part))?;
                let (images, batch) = rest.split_once(['x', 'X']).ok_or_else(|| bad(part))?;
                let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(part));
                Ok(Stage::new(num(res)?, num(images)?, num(batch)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Schedule::new(stages)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_two_stages() {
        let s = Schedule::parse("16:1000x32,32:500x16").unwrap();
        assert_eq!(
            s.stages,
            vec![Stage::new(16, 1000, 32), Stage::new(32, 500, 16)]
        );
        assert_eq!(s.stages[0].steps(), 32);
        assert_eq!(s.stages[0].generator_lr, 1e-4);
        assert_eq!(s.stages[0].discriminator_lr, 2e-4);
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(Schedule::parse("").is_err());
        assert!(Schedule::parse("16:100").is_err());
        assert!(Schedule::parse("32:100x4,16:100x4").is_err());
        assert!(Schedule::parse("16:0x4").is_err());
    }
}
