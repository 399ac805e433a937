//! Automatic metrics: BLEU, ROUGE-L, attribute coverage and the masking
//! ablation matrix.

mod ablation;
mod coverage;
mod text;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::CorpusRecord;
use crate::error::Result;
use crate::mr::AttributeSchema;

pub use ablation::{ablation_matrix, AblationMatrix, BASE_ROW};
pub use coverage::{coverage_ratio, CoverageMatcher, MatchMode};
pub use text::{bleu, corpus_rouge_l, rouge_l};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub bleu: f64,
    pub rouge_l: f64,
    pub coverage: BTreeMap<String, f64>,
}

/// Scores delexicalized `outputs` against the records' references, with
/// coverage over every schema attribute.
pub fn evaluate(
    records: &[CorpusRecord],
    outputs: &[String],
    schema: &AttributeSchema,
    matcher: &CoverageMatcher,
) -> Result<MetricsReport> {
    let references: Vec<String> = records.iter().map(|r| r.reference.clone()).collect();
    let coverage = schema
        .names()
        .map(|a| Ok((a.to_string(), coverage_ratio(records, outputs, a, matcher)?)))
        .collect::<Result<_>>()?;
    Ok(MetricsReport {
        bleu: bleu(outputs, &references)?,
        rouge_l: corpus_rouge_l(outputs, &references)?,
        coverage,
    })
}
