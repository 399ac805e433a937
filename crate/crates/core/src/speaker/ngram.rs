//! Add-k smoothed n-gram speaker over `[context ; BOS ; prefix]`.
//!
//! The n-gram window only reaches the input for the first few output
//! positions, so on its own the model is nearly input-blind. An optional
//! lexical factor (see [`LexicalModel`]) re-weights each step distribution
//! by how strongly the input context predicts each token:
//!
//! `log S0(v | i, h) = log_softmax_v( log P_ngram(v | h) + w · boost(v | i, prefix) )`
//!
//! With `input_weight = 0` the model is the plain n-gram.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lexical::{BoundLexicon, LexicalFile, LexicalModel};
use super::{PreparedSpeaker, SpeakerModel, TrainingPair};
use crate::error::{Error, Result};
use crate::logspace::log_softmax;
use crate::vocab::{TokenId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NGramConfig {
    pub order: usize,
    pub k: f64,
    /// Weight of the input-conditioned lexical factor; 0 disables it.
    pub input_weight: f64,
    pub lexical_iterations: usize,
}

impl Default for NGramConfig {
    fn default() -> Self {
        Self {
            order: 3,
            k: 0.1,
            input_weight: 2.5,
            lexical_iterations: 5,
        }
    }
}

impl NGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidParameter(format!(
                "n-gram order must be at least 2, got {}",
                self.order
            )));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing constant must be positive, got {}",
                self.k
            )));
        }
        if !(self.input_weight.is_finite() && self.input_weight >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "input weight must be non-negative, got {}",
                self.input_weight
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct HistoryCounts {
    next: HashMap<TokenId, u64>,
    total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramSpeaker {
    order: usize,
    k: f64,
    input_weight: f64,
    vocab: Vocabulary,
    counts: HashMap<Vec<TokenId>, HistoryCounts>,
    lexical: Option<LexicalModel>,
}

/// Counts every output position (each output token and the final EOS)
/// against its n-1 preceding tokens in `[context ; BOS ; output ; EOS]`.
pub fn train_ngram_speaker(
    corpus: &[TrainingPair],
    vocab: &Vocabulary,
    config: NGramConfig,
) -> Result<NGramSpeaker> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput("speaker training corpus is empty"));
    }
    for pair in corpus {
        pair.context.validate(vocab.len())?;
        pair.output.validate(vocab.len())?;
    }
    let mut counts: HashMap<Vec<TokenId>, HistoryCounts> = HashMap::new();
    let window = config.order - 1;
    for pair in corpus {
        let mut seq = pair.context.ids.clone();
        seq.push(TokenId::BOS);
        let first = seq.len();
        seq.extend_from_slice(pair.output.body());
        seq.push(TokenId::EOS);
        for pos in first..seq.len() {
            let history = seq[pos.saturating_sub(window)..pos].to_vec();
            let entry = counts.entry(history).or_default();
            *entry.next.entry(seq[pos]).or_insert(0) += 1;
            entry.total += 1;
        }
    }
    let lexical = (config.input_weight > 0.0)
        .then(|| LexicalModel::train(corpus, vocab.len(), config.k, config.lexical_iterations));
    Ok(NGramSpeaker {
        order: config.order,
        k: config.k,
        input_weight: config.input_weight,
        vocab: vocab.clone(),
        counts,
        lexical,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NGramFile {
    #[serde(rename = "type")]
    kind: String,
    order: usize,
    k: f64,
    vocab: Vocabulary,
    counts: BTreeMap<String, BTreeMap<String, u64>>,
    #[serde(default)]
    input_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lexical: Option<LexicalFile>,
}

fn history_key(history: &[TokenId]) -> String {
    history
        .iter()
        .map(|id| id.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

impl NGramSpeaker {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn input_weight(&self) -> f64 {
        self.input_weight
    }

    /// The n-gram history used to score the token after `prefix`.
    pub fn history(&self, context: &[TokenId], prefix: &[TokenId]) -> Vec<TokenId> {
        let window = self.order - 1;
        let mut full: Vec<TokenId> = Vec::with_capacity(context.len() + prefix.len() + 1);
        full.extend_from_slice(context);
        full.push(TokenId::BOS);
        full.extend_from_slice(prefix);
        full[full.len().saturating_sub(window)..].to_vec()
    }

    pub fn count(&self, history: &[TokenId], next: TokenId) -> u64 {
        self.counts
            .get(history)
            .and_then(|h| h.next.get(&next))
            .copied()
            .unwrap_or(0)
    }

    pub fn history_total(&self, history: &[TokenId]) -> u64 {
        self.counts.get(history).map_or(0, |h| h.total)
    }

    /// `(c + k) / (total + k|V|)`: the smoothed n-gram factor alone.
    pub fn conditional_prob(&self, history: &[TokenId], next: TokenId) -> f64 {
        let v = self.vocab.len() as f64;
        (self.count(history, next) as f64 + self.k) / (self.history_total(history) as f64 + self.k * v)
    }

    fn ngram_logprobs(&self, history: &[TokenId]) -> Vec<f64> {
        let v = self.vocab.len();
        let (total, seen) = match self.counts.get(history) {
            Some(h) => (h.total as f64, Some(&h.next)),
            None => (0.0, None),
        };
        let denom = total + self.k * v as f64;
        let mut out = vec![(self.k / denom).ln(); v];
        if let Some(seen) = seen {
            for (id, c) in seen {
                out[id.index()] = ((*c as f64 + self.k) / denom).ln();
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut counts = BTreeMap::new();
        for (history, h) in &self.counts {
            let row: BTreeMap<String, u64> = h.next.iter().map(|(id, c)| (id.to_string(), *c)).collect();
            counts.insert(history_key(history), row);
        }
        let file = NGramFile {
            kind: "ngram".into(),
            order: self.order,
            k: self.k,
            vocab: self.vocab.clone(),
            counts,
            input_weight: self.input_weight,
            lexical: self.lexical.as_ref().map(LexicalModel::to_file),
        };
        // round-tripping through Value sorts every object's keys
        Ok(serde_json::to_string(&serde_json::to_value(&file)?)?)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        Self::from_json_value(serde_json::from_str(json)?)
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        let file: NGramFile = serde_json::from_value(value)?;
        if file.kind != "ngram" {
            return Err(Error::Model(format!(
                "expected an ngram model, got `{}`",
                file.kind
            )));
        }
        NGramConfig {
            order: file.order,
            k: file.k,
            input_weight: file.input_weight,
            lexical_iterations: 1,
        }
        .validate()?;
        let size = file.vocab.len();
        let parse = |s: &str| -> Result<TokenId> {
            let id: u32 = s
                .parse()
                .map_err(|_| Error::Model(format!("bad token id `{s}`")))?;
            if id as usize >= size {
                return Err(Error::TokenOutOfRange { id, size });
            }
            Ok(TokenId(id))
        };
        let mut counts = HashMap::new();
        for (key, row) in file.counts {
            let history = key.split_whitespace().map(parse).collect::<Result<Vec<_>>>()?;
            let mut h = HistoryCounts::default();
            for (id, c) in row {
                h.next.insert(parse(&id)?, c);
                h.total += c;
            }
            counts.insert(history, h);
        }
        let lexical = match (file.lexical, file.input_weight > 0.0) {
            (Some(lex), true) => Some(LexicalModel::from_file(lex, file.k, size)?),
            (None, true) => return Err(Error::Model("input_weight > 0 requires a lexical table".into())),
            (_, false) => None,
        };
        Ok(Self {
            order: file.order,
            k: file.k,
            input_weight: file.input_weight,
            vocab: file.vocab,
            counts,
            lexical,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

struct PreparedNGram<'a> {
    model: &'a NGramSpeaker,
    tail: Vec<TokenId>,
    lexicon: Option<BoundLexicon>,
}

impl SpeakerModel for NGramSpeaker {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn prepare<'a>(&'a self, context: &[TokenId]) -> Box<dyn PreparedSpeaker + 'a> {
        let mut tail = context.to_vec();
        tail.push(TokenId::BOS);
        let keep = self.order - 1;
        let tail = tail[tail.len().saturating_sub(keep)..].to_vec();
        Box::new(PreparedNGram {
            model: self,
            tail,
            lexicon: self.lexical.as_ref().map(|lex| lex.bind(context)),
        })
    }
}

impl PreparedSpeaker for PreparedNGram<'_> {
    fn next_token_logprobs(&self, prefix: &[TokenId]) -> Vec<f64> {
        let window = self.model.order - 1;
        let history: Vec<TokenId> = if prefix.len() >= window {
            prefix[prefix.len() - window..].to_vec()
        } else {
            let from_tail = window - prefix.len();
            self.tail[self.tail.len().saturating_sub(from_tail)..]
                .iter()
                .chain(prefix)
                .copied()
                .collect()
        };
        let base = self.model.ngram_logprobs(&history);
        match &self.lexicon {
            None => base,
            Some(lexicon) => {
                let w = self.model.input_weight;
                let logits: Vec<f64> = base
                    .iter()
                    .zip(lexicon.log_boost(prefix))
                    .map(|(b, x)| b + w * x)
                    .collect();
                log_softmax(&logits).expect("smoothed logits are finite")
            }
        }
    }
}
