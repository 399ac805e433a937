//! Corpora: synthetic generation, E2E CSV ingestion, delexicalization and
//! JSONL serialization.

mod e2e;
mod synthetic;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mr::{AttributeKind, AttributeSchema, MeaningRepresentation};
use crate::speaker::TrainingPair;
use crate::vocab::{is_placeholder, normalize_tokens, tokenize, Vocabulary};

pub use e2e::{parse_e2e_csv, parse_mr};
pub use synthetic::{generate_corpus, SyntheticGrammar};

/// One (MR, reference) pair. `delex` maps placeholder tokens to the surface
/// strings they replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    pub mr: MeaningRepresentation,
    #[serde(rename = "ref")]
    pub reference: String,
    #[serde(default)]
    pub delex: BTreeMap<String, String>,
}

/// Replaces the values of delexicalized attributes by their placeholders,
/// in the MR and wherever they occur verbatim in the reference.
pub fn delexicalize(record: &CorpusRecord, schema: &AttributeSchema) -> CorpusRecord {
    let mut out = record.clone();
    let mut swaps: Vec<(String, String)> = Vec::new();
    for attr in &schema.attributes {
        let Some(placeholder) = attr.placeholder() else {
            continue;
        };
        let Some(value) = record.mr.get(&attr.name) else {
            continue;
        };
        if value == placeholder {
            continue;
        }
        out.mr.set(attr.name.clone(), placeholder);
        out.delex.insert(placeholder.to_string(), value.to_string());
        swaps.push((value.to_string(), placeholder.to_string()));
    }
    // longer values first, so a value containing another is not split
    swaps.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    for (value, placeholder) in swaps {
        out.reference = out.reference.replace(&value, &placeholder);
    }
    out
}

/// Substitutes mapped surface strings back for placeholder tokens.
/// Placeholders without a mapping are left as they are.
pub fn relexicalize(text: &str, delex: &BTreeMap<String, String>) -> String {
    let out = substitute_placeholders(text, delex);
    for tok in out.split_whitespace() {
        if is_placeholder(tok) {
            log::warn!("placeholder {tok} has no mapping; left verbatim");
        }
    }
    out
}

pub(crate) fn substitute_placeholders(text: &str, delex: &BTreeMap<String, String>) -> String {
    let mut out = text.to_string();
    for (placeholder, value) in delex {
        out = out.replace(placeholder.as_str(), value);
    }
    out
}

pub fn write_jsonl(records: &[CorpusRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(&serde_json::to_value(r)?)?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads one record per non-blank line.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(&line).map_err(|e| Error::Jsonl {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Vocabulary over the schema's context tokens and every reference token.
pub fn build_vocabulary(records: &[CorpusRecord], schema: &AttributeSchema) -> Vocabulary {
    let mut words = schema.context_tokens();
    for r in records {
        words.extend(normalize_tokens(&r.reference));
        for (attr, value) in r.mr.iter() {
            if schema.get(attr).map(|a| a.kind) != Some(AttributeKind::Delexicalized) {
                words.extend(normalize_tokens(value));
            }
        }
    }
    Vocabulary::build(words)
}

/// Linearized MR contexts paired with tokenized references.
pub fn training_pairs(
    records: &[CorpusRecord],
    schema: &AttributeSchema,
    vocab: &Vocabulary,
) -> Result<Vec<TrainingPair>> {
    records
        .iter()
        .map(|r| {
            Ok(TrainingPair {
                context: crate::mr::linearize_mr(&r.mr, schema, vocab)?,
                output: tokenize(&r.reference, vocab),
            })
        })
        .collect()
}

/// Groups record indices into documents by the id convention
/// `<document>#<unit>`. Groups keep first-appearance order and units keep
/// file order; ids without `#` form single-unit documents.
pub fn group_documents(records: &[CorpusRecord]) -> Vec<Vec<usize>> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = match r.id.rsplit_once('#') {
            Some((doc, _)) => doc,
            None => r.id.as_str(),
        };
        let entry = groups.entry(key).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(i);
    }
    order
        .into_iter()
        .map(|k| groups.remove(k).unwrap_or_default())
        .collect()
}
