//! Settings file shared by the command-line subcommands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::{RandomizationConfig, TrainConfig};
use crate::runtime::RigConfig;
use crate::selector::SelectorConfig;

/// Every section is optional; missing values take their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub rig: RigConfig,
    pub train: TrainConfig,
    pub randomization: RandomizationConfig,
    pub selector: SelectorConfig,
    pub episode: EpisodeSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeSettings {
    /// Training episode length, s.
    pub seconds: f64,
}

impl Default for EpisodeSettings {
    fn default() -> Self {
        Self { seconds: 10.0 }
    }
}

impl AppConfig {
    pub fn from_toml_str(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml_str(&std::fs::read_to_string(path)?, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = AppConfig::from_toml_str("[train]\niterations = 7\n", "inline").unwrap();
        assert_eq!(c.train.iterations, 7);
        assert_eq!(c.rig, RigConfig::default());
    }
}
