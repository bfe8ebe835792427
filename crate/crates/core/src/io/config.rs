use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{FormatError, Result};
use crate::generator::GeneratorConfig;
use crate::inversion::InversionConfig;
use crate::training::Schedule;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub images: Option<PathBuf>,
}

/// Everything a command needs beyond its flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    pub seed: u64,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub inversion: Option<InversionConfig>,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| FormatError::Config(e.to_string()))?;
        cfg.generator.validate()?;
        if let Some(s) = &cfg.schedule {
            s.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    const GEN: &str = r#""generator": {"z_dim": 8, "w_dim": 16, "levels": 3, "feature_dim": 8,
        "num_classes": 0, "class_embed_dim": 8, "leaky_slope": 0.2, "test_identity_activation": false}"#;

    #[test]
    fn minimal_document_parses() {
        let cfg = RunConfig::from_json(&format!("{{{GEN}, \"seed\": 4}}")).unwrap();
        assert_eq!(cfg.generator.levels, 3);
        assert!(cfg.schedule.is_none());
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn full_document_parses() {
        let text = format!(
            r#"{{{GEN}, "seed": 1,
               "schedule": [{{"resolution": 8, "images": 64, "batch_size": 8}}],
               "inversion": {{"steps": 10, "init": {{"from-z": 3}}, "loss": "mse-gradient"}},
               "outputs": {{"checkpoint": "g.pinr"}}}}"#
        );
        let cfg = RunConfig::from_json(&text).unwrap();
        assert_eq!(cfg.schedule.unwrap().stages[0].steps(), 8);
        assert_eq!(cfg.inversion.unwrap().steps, 10);
    }

    #[test]
    fn unknown_and_missing_keys_are_rejected() {
        let unknown = format!("{{{GEN}, \"seed\": 4, \"sead\": 5}}");
        assert!(matches!(
            RunConfig::from_json(&unknown),
            Err(Error::Format(FormatError::Config(_)))
        ));
        assert!(matches!(
            RunConfig::from_json(&format!("{{{GEN}}}")),
            Err(Error::Format(FormatError::Config(_)))
        ));
        let partial = r#"{"generator": {"z_dim": 8}, "seed": 0}"#;
        assert!(RunConfig::from_json(partial).is_err());
    }
}
