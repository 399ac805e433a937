use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Classify, CliResult};

/// Experiment settings read from `--config`. Every key is optional and
/// command-line flags take precedence over it.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub schema: Option<PathBuf>,

    pub grammar: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub n_train: Option<usize>,
    pub n_dev: Option<usize>,
    pub n_test: Option<usize>,
    pub omission: Option<f64>,
    pub presence: Option<f64>,

    pub data: Option<PathBuf>,
    pub kind: Option<String>,
    pub listener_type: Option<String>,
    pub order: Option<usize>,
    pub k: Option<f64>,
    pub input_weight: Option<f64>,
    pub lexical_iterations: Option<usize>,
    pub listener_k: Option<f64>,
    pub members: Option<Vec<PathBuf>>,
    pub weight: Option<f64>,

    pub input: Option<PathBuf>,
    pub speaker: Option<PathBuf>,
    pub listener: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub mode: Option<String>,
    pub preset: Option<String>,
    pub beam_size: Option<usize>,
    pub max_len: Option<usize>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub distractor_policy: Option<String>,

    pub predictions: Option<PathBuf>,
    pub references: Option<PathBuf>,
    pub metrics: Option<Vec<String>>,

    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
            .usage()?;
        serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
            .usage()
    }
}
