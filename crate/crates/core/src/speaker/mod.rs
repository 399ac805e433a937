//! Base speakers: next-token distributions conditioned on an input context.
//!
//! A speaker is queried through [`SpeakerModel::prepare`], which binds the
//! model to one input context so that work depending only on the input is
//! done once per decode rather than once per step.

mod ensemble;
mod lexical;
mod ngram;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{TokenId, TokenSequence, Vocabulary};

pub use ensemble::EnsembleSpeaker;
pub use lexical::{BoundLexicon, LexicalModel};
pub use ngram::{train_ngram_speaker, NGramConfig, NGramSpeaker};

pub trait SpeakerModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    /// Binds the model to one conditioning context.
    fn prepare<'a>(&'a self, context: &[TokenId]) -> Box<dyn PreparedSpeaker + 'a>;
}

/// A speaker bound to one input context.
pub trait PreparedSpeaker {
    /// Log-probabilities of every vocabulary item following `prefix`.
    fn next_token_logprobs(&self, prefix: &[TokenId]) -> Vec<f64>;
}

/// A (context, output) supervision pair; `output` carries no BOS/EOS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub context: TokenSequence,
    pub output: TokenSequence,
}

pub fn next_token_logprobs(model: &dyn SpeakerModel, context: &[TokenId], prefix: &[TokenId]) -> Vec<f64> {
    model.prepare(context).next_token_logprobs(prefix)
}

/// Chain-rule log-probability of an EOS-terminated output.
pub fn sequence_logprob(
    model: &dyn SpeakerModel,
    context: &[TokenId],
    output: &TokenSequence,
) -> Result<f64> {
    if !output.is_terminated() {
        return Err(Error::Unterminated);
    }
    output.validate(model.vocab().len())?;
    Ok(prepared_sequence_logprob(
        model.prepare(context).as_ref(),
        &output.ids,
    ))
}

pub(crate) fn prepared_sequence_logprob(speaker: &dyn PreparedSpeaker, ids: &[TokenId]) -> f64 {
    let mut total = 0.0;
    for t in 0..ids.len() {
        total += speaker.next_token_logprobs(&ids[..t])[ids[t].index()];
    }
    total
}

/// Weighted combination of two log-scores: `w·a + (1-w)·b`.
pub fn ensemble_logprob(a_logprob: f64, b_logprob: f64, w: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!(
            "ensemble weight {w} outside [0, 1]"
        )));
    }
    Ok(w * a_logprob + (1.0 - w) * b_logprob)
}

/// Serialized form of an ensemble: member models are referenced by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub w: f64,
    pub members: [String; 2],
}

/// Loads any speaker model file (`ngram` or `ensemble`). Relative ensemble
/// member paths resolve against the ensemble file's directory.
pub fn load_speaker(path: impl AsRef<Path>) -> Result<Arc<dyn SpeakerModel>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("type").and_then(|t| t.as_str()) {
        Some("ngram") => Ok(Arc::new(NGramSpeaker::from_json_value(value)?)),
        Some("ensemble") => {
            let mut obj = value;
            obj.as_object_mut().map(|m| m.remove("type"));
            let file: EnsembleFile = serde_json::from_value(obj)?;
            let base = path.parent().unwrap_or(Path::new("."));
            let a = load_speaker(base.join(&file.members[0]))?;
            let b = load_speaker(base.join(&file.members[1]))?;
            Ok(Arc::new(EnsembleSpeaker::new(a, b, file.w)?))
        }
        other => Err(Error::Model(format!("unknown speaker type {other:?}"))),
    }
}

pub fn ensemble_json(file: &EnsembleFile) -> Result<String> {
    let mut value = serde_json::to_value(file)?;
    value
        .as_object_mut()
        .expect("struct serializes to an object")
        .insert("type".into(), "ensemble".into());
    Ok(serde_json::to_string(&value)?)
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::logspace::log_softmax;

    /// A speaker backed by an explicit table: the next-token distribution is
    /// a function of (context, prefix) supplied by the test.
    pub struct TableSpeaker<F> {
        pub vocab: Vocabulary,
        pub table: F,
    }

    pub struct PreparedTable<'a, F> {
        owner: &'a TableSpeaker<F>,
        context: Vec<TokenId>,
    }

    impl<F> SpeakerModel for TableSpeaker<F>
    where
        F: Fn(&[TokenId], &[TokenId]) -> Vec<f64> + Send + Sync,
    {
        fn vocab(&self) -> &Vocabulary {
            &self.vocab
        }

        fn prepare<'a>(&'a self, context: &[TokenId]) -> Box<dyn PreparedSpeaker + 'a> {
            Box::new(PreparedTable {
                owner: self,
                context: context.to_vec(),
            })
        }
    }

    impl<F> PreparedSpeaker for PreparedTable<'_, F>
    where
        F: Fn(&[TokenId], &[TokenId]) -> Vec<f64>,
    {
        fn next_token_logprobs(&self, prefix: &[TokenId]) -> Vec<f64> {
            let probs = (self.owner.table)(&self.context, prefix);
            log_softmax(&probs.iter().map(|p| p.ln()).collect::<Vec<_>>()).unwrap()
        }
    }
}
