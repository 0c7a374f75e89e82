use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// One experiment run as read from a JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    /// Experiment-specific parameters; missing keys take the experiment defaults.
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub strict_mode: bool,
    #[serde(default)]
    pub emit_hidden: bool,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// A config with default parameters.
    pub fn new(experiment: &str, seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            params: empty_object(),
            out_dir: out_dir.into(),
            strict_mode: false,
            emit_hidden: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
