use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::Args;
use prag_core::data::{relexicalize, CorpusRecord};
use prag_core::eval::{bleu, corpus_rouge_l, coverage_ratio, CoverageMatcher};
use serde::Deserialize;
use serde_json::{Map, Value};

use super::{load_schema, pick, read_records, required, write_output};
use crate::config::ExperimentConfig;
use crate::error::{Classify, CliError, CliResult};

pub const METRICS: [&str; 3] = ["bleu", "rouge_l", "coverage"];

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions written by `generate`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Dataset split holding the references.
    #[arg(long)]
    pub references: Option<PathBuf>,
    /// Subset of bleu, rouge_l, coverage.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Metrics JSON; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct Prediction {
    id: String,
    output: String,
}

fn read_predictions(path: &Path) -> CliResult<Vec<Prediction>> {
    let file = File::open(path)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        .usage()?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
            .usage()?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(&line)
            .map_err(|e| anyhow::anyhow!("{}: line {}: {e}", path.display(), i + 1))
            .usage()?;
        out.push(p);
    }
    Ok(out)
}

pub fn run(args: &EvaluateArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let metrics: Vec<String> =
        pick(&args.metrics, &cfg.metrics).unwrap_or_else(|| METRICS.iter().map(|m| m.to_string()).collect());
    if let Some(bad) = metrics.iter().find(|m| !METRICS.contains(&m.as_str())) {
        return Err(CliError::usage(format!(
            "unknown metric `{bad}` (expected one of {METRICS:?})"
        )));
    }
    let schema = load_schema(&args.schema, cfg)?;
    let predictions = read_predictions(&required(&args.predictions, &cfg.predictions, "predictions")?)?;
    let references = read_records(
        &required(&args.references, &cfg.references, "references")?,
        &schema,
    )?;

    let by_id = index_by_id(references.iter().map(|r| r.id.as_str()), "reference")?;
    let pred_ids = index_by_id(predictions.iter().map(|p| p.id.as_str()), "prediction")?;
    let unmatched: BTreeSet<&str> = pred_ids
        .keys()
        .filter(|id| !by_id.contains_key(*id))
        .chain(by_id.keys().filter(|id| !pred_ids.contains_key(*id)))
        .copied()
        .collect();
    if !unmatched.is_empty() {
        let list: Vec<&str> = unmatched.into_iter().collect();
        return Err(CliError::usage(format!("unmatched ids: {}", list.join(", "))));
    }

    // reference order; references are compared in surface form
    let records: Vec<CorpusRecord> = references
        .iter()
        .map(|r| CorpusRecord {
            reference: relexicalize(&r.reference, &r.delex),
            ..r.clone()
        })
        .collect();
    let outputs: Vec<String> = records
        .iter()
        .map(|r| predictions[pred_ids[r.id.as_str()]].output.clone())
        .collect();
    let refs: Vec<String> = records.iter().map(|r| r.reference.clone()).collect();

    let mut report = Map::new();
    for m in &metrics {
        let value = match m.as_str() {
            "bleu" => Value::from(bleu(&outputs, &refs).usage()?),
            "rouge_l" => Value::from(corpus_rouge_l(&outputs, &refs).usage()?),
            _ => {
                let matcher = CoverageMatcher::from_schema(&schema);
                let mut cov = Map::new();
                for a in schema.names() {
                    cov.insert(
                        a.to_string(),
                        Value::from(coverage_ratio(&records, &outputs, a, &matcher).usage()?),
                    );
                }
                Value::Object(cov)
            }
        };
        report.insert(m.clone(), value);
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(report)).runtime()?;
    text.push('\n');
    write_output(pick(&args.out, &cfg.out).as_deref(), &text)
}

fn index_by_id<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> CliResult<BTreeMap<&'a str, usize>> {
    let mut map = BTreeMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id, i).is_some() {
            return Err(CliError::usage(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(map)
}
