pub mod ablate;
pub mod evaluate;
pub mod generate;
pub mod synth;
pub mod train;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use prag_core::data::{read_jsonl, CorpusRecord};
use prag_core::pragmatics::{DecodeConfig, DecodeMode};
use prag_core::AttributeSchema;

use crate::config::ExperimentConfig;
use crate::error::{Classify, CliError, CliResult};

/// The flag if given, else the config value.
pub fn pick<T: Clone>(flag: &Option<T>, cfg: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| cfg.clone())
}

pub fn required<T: Clone>(flag: &Option<T>, cfg: &Option<T>, name: &str) -> CliResult<T> {
    pick(flag, cfg).ok_or_else(|| CliError::usage(format!("missing --{name} (flag or config key)")))
}

pub fn load_schema(flag: &Option<PathBuf>, cfg: &ExperimentConfig) -> CliResult<AttributeSchema> {
    match pick(flag, &cfg.schema) {
        Some(path) => AttributeSchema::load(path).usage(),
        None => Ok(AttributeSchema::e2e()),
    }
}

/// Records of a JSONL split, with every MR checked against the schema.
pub fn read_records(path: &Path, schema: &AttributeSchema) -> CliResult<Vec<CorpusRecord>> {
    let records = read_jsonl(path).usage()?;
    for r in &records {
        r.mr.validate(schema)
            .map_err(|e| anyhow::anyhow!("{}: record `{}`: {e}", path.display(), r.id))
            .usage()?;
    }
    Ok(records)
}

/// Writes to `path`, or to stdout without one.
pub fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))
            .runtime(),
        None => std::io::stdout().write_all(text.as_bytes()).runtime(),
    }
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Hyperparameter defaults: `mr` or `summarization`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub beam_size: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl DecodeArgs {
    pub fn resolve(&self, cfg: &ExperimentConfig, mode: DecodeMode) -> CliResult<DecodeConfig> {
        let mut config = match pick(&self.preset, &cfg.preset).as_deref() {
            None | Some("mr") => DecodeConfig::mr_preset(),
            Some("summarization") => DecodeConfig::summarization_preset(),
            Some(other) => {
                return Err(CliError::usage(format!(
                    "unknown preset `{other}` (expected mr or summarization)"
                )))
            }
        };
        config.mode = mode;
        if let Some(b) = pick(&self.beam_size, &cfg.beam_size) {
            config.beam_size = b;
        }
        if let Some(m) = pick(&self.max_len, &cfg.max_len) {
            config.max_len = m;
        }
        if let Some(l) = pick(&self.lambda, &cfg.lambda) {
            config.lambda = l;
        }
        if let Some(a) = pick(&self.alpha, &cfg.alpha) {
            config.alpha = a;
        }
        config.validate().usage()?;
        Ok(config)
    }
}
