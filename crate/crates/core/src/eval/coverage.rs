use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{substitute_placeholders, CorpusRecord};
use crate::error::{Error, Result};
use crate::mr::{AttributeKind, AttributeSchema};
use crate::vocab::normalize_tokens;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// The (relexicalized) assigned value must appear verbatim.
    Exact,
    /// Any lexicon phrase counts, whatever the assigned value.
    Lexicon(Vec<String>),
}

/// How each attribute's realization is detected in output text. Matching
/// runs on normalized tokens, so it is case-insensitive and respects token
/// boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMatcher {
    modes: BTreeMap<String, MatchMode>,
}

impl CoverageMatcher {
    /// Exact matching everywhere except boolean attributes, which use their
    /// schema lexicon (falling back to exact matching without one).
    pub fn from_schema(schema: &AttributeSchema) -> Self {
        let modes = schema
            .attributes
            .iter()
            .map(|a| {
                let mode = match (&a.kind, &a.lexicon) {
                    (AttributeKind::Boolean, Some(lex)) if !lex.is_empty() => MatchMode::Lexicon(lex.clone()),
                    _ => MatchMode::Exact,
                };
                (a.name.clone(), mode)
            })
            .collect();
        Self { modes }
    }

    pub fn with_mode(mut self, attr: impl Into<String>, mode: MatchMode) -> Self {
        self.modes.insert(attr.into(), mode);
        self
    }

    pub fn mode(&self, attr: &str) -> &MatchMode {
        self.modes.get(attr).unwrap_or(&MatchMode::Exact)
    }

    /// Whether `text` (already relexicalized) realizes `attr = surface`.
    pub fn matches(&self, attr: &str, surface: &str, text: &str) -> bool {
        let tokens = normalize_tokens(text);
        match self.mode(attr) {
            MatchMode::Exact => contains_phrase(&tokens, surface),
            MatchMode::Lexicon(lex) => lex.iter().any(|p| contains_phrase(&tokens, p)),
        }
    }
}

fn contains_phrase(tokens: &[String], phrase: &str) -> bool {
    let phrase = normalize_tokens(phrase);
    !phrase.is_empty() && tokens.windows(phrase.len()).any(|w| w == phrase.as_slice())
}

/// Fraction of records assigning `attr` whose output realizes its value.
/// Outputs may contain placeholders; they are relexicalized with each
/// record's map first. With no record assigning `attr` the ratio is 1.
pub fn coverage_ratio(
    records: &[CorpusRecord],
    outputs: &[String],
    attr: &str,
    matcher: &CoverageMatcher,
) -> Result<f64> {
    if records.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            left: records.len(),
            right: outputs.len(),
        });
    }
    let mut assigned = 0usize;
    let mut hits = 0usize;
    for (r, out) in records.iter().zip(outputs) {
        let Some(value) = r.mr.get(attr) else {
            continue;
        };
        assigned += 1;
        let surface = r.delex.get(value).map(String::as_str).unwrap_or(value);
        if matcher.matches(attr, surface, &substitute_placeholders(out, &r.delex)) {
            hits += 1;
        }
    }
    if assigned == 0 {
        log::warn!("no record assigns `{attr}`; coverage defined as 1.0");
        return Ok(1.0);
    }
    Ok(hits as f64 / assigned as f64)
}
