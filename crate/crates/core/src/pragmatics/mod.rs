//! Decoding: base beam search, reconstructor reranking and incremental
//! distractor-based decoding.
//!
//! Rankings everywhere order by score (descending), then base log-probability
//! (descending), then token ids (lexicographic, smaller first), so every
//! decode is reproducible bit for bit.

mod beam;
mod belief;
mod incremental;
mod reconstructor;

use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::listener::ListenerModel;
use crate::mr::{AttributeSchema, Input};
use crate::speaker::SpeakerModel;
use crate::vocab::{TokenId, TokenSequence};

pub use beam::beam_search;
pub use belief::{belief_update, distractor_step_scores, BeliefState};
pub use incremental::{distractor_beam_search, pragmatic_decode_distractor};
pub use reconstructor::rerank_reconstructor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Base,
    Reconstructor,
    Distractor,
}

impl FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Self::Base),
            "reconstructor" => Ok(Self::Reconstructor),
            "distractor" => Ok(Self::Distractor),
            other => Err(Error::InvalidParameter(format!(
                "unknown decode mode `{other}` (expected base, reconstructor or distractor)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub beam_size: usize,
    pub max_len: usize,
    /// Listener weight in reconstructor reranking.
    pub lambda: f64,
    /// Rationality exponent on the distractor listener.
    pub alpha: f64,
    pub mode: DecodeMode,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self::mr_preset()
    }
}

impl DecodeConfig {
    /// Meaning-representation task defaults.
    pub fn mr_preset() -> Self {
        Self {
            beam_size: 10,
            max_len: 50,
            lambda: 0.4,
            alpha: 0.2,
            mode: DecodeMode::Base,
        }
    }

    /// Summarization-style task defaults.
    pub fn summarization_preset() -> Self {
        Self {
            beam_size: 20,
            max_len: 50,
            lambda: 0.9,
            alpha: 1.0,
            mode: DecodeMode::Base,
        }
    }

    pub fn with_mode(mut self, mode: DecodeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::InvalidParameter("beam size must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(Error::InvalidParameter("max_len must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// One decoded output with the terms its ranking was based on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub output: TokenSequence,
    pub base_logprob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub listener_logprob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combined_score: Option<f64>,
}

impl ScoredCandidate {
    pub fn base(output: TokenSequence, base_logprob: f64) -> Self {
        Self {
            output,
            base_logprob,
            listener_logprob: None,
            combined_score: None,
        }
    }

    fn rank_key(&self) -> f64 {
        self.combined_score.unwrap_or(self.base_logprob)
    }
}

fn cmp_desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Score desc, then base desc, then ids ascending.
pub(crate) fn rank_order(
    score_a: f64,
    base_a: f64,
    ids_a: &[TokenId],
    score_b: f64,
    base_b: f64,
    ids_b: &[TokenId],
) -> Ordering {
    cmp_desc(score_a, score_b)
        .then_with(|| cmp_desc(base_a, base_b))
        .then_with(|| ids_a.cmp(ids_b))
}

pub(crate) fn sort_candidates(cands: &mut [ScoredCandidate]) {
    cands.sort_by(|a, b| {
        rank_order(
            a.rank_key(),
            a.base_logprob,
            &a.output.ids,
            b.rank_key(),
            b.base_logprob,
            &b.output.ids,
        )
    });
}

/// Runs the decoder selected by `config.mode` and returns its best output.
///
/// Distractor mode with an empty distractor list decodes with the base
/// speaker; passing `None` there is an error.
pub fn generate(
    speaker: &dyn SpeakerModel,
    listener: Option<&dyn ListenerModel>,
    schema: &AttributeSchema,
    input: &Input,
    distractors: Option<&[Input]>,
    config: &DecodeConfig,
) -> Result<ScoredCandidate> {
    config.validate()?;
    let vocab = speaker.vocab();
    let context = input.context(schema, vocab)?;
    let top = |mut ranked: Vec<ScoredCandidate>| {
        ranked.truncate(1);
        ranked
            .pop()
            .ok_or(Error::EmptyInput("decoder produced no candidates"))
    };
    match config.mode {
        DecodeMode::Base => top(beam_search(speaker, &context.ids, config)),
        DecodeMode::Reconstructor => {
            let listener =
                listener.ok_or(Error::MissingCollaborator("reconstructor mode needs a listener"))?;
            if listener.vocab() != vocab {
                return Err(Error::VocabularyMismatch("speaker and listener"));
            }
            let candidates = beam_search(speaker, &context.ids, config);
            top(rerank_reconstructor(input, &candidates, listener, config.lambda)?)
        }
        DecodeMode::Distractor => {
            let distractors =
                distractors.ok_or(Error::MissingCollaborator("distractor mode needs distractors"))?;
            if distractors.is_empty() {
                return top(beam_search(speaker, &context.ids, config));
            }
            let contexts = distractors
                .iter()
                .map(|d| d.context(schema, vocab))
                .collect::<Result<Vec<_>>>()?;
            pragmatic_decode_distractor(speaker, &context, &contexts, config)
        }
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Exhaustive enumeration over a tiny output alphabet, computed in
    //! probability space straight from the defining products.

    use super::*;
    use crate::speaker::next_token_logprobs;

    /// All outputs over `alphabet` (EOS excluded) of at most `max_len`
    /// tokens: EOS-terminated ones plus unterminated ones of length max_len.
    pub fn all_outputs(alphabet: &[TokenId], max_len: usize) -> Vec<Vec<TokenId>> {
        let mut out = Vec::new();
        let mut frontier: Vec<Vec<TokenId>> = vec![vec![]];
        for len in 1..=max_len {
            let mut next = Vec::new();
            for prefix in &frontier {
                let mut done = prefix.clone();
                done.push(TokenId::EOS);
                out.push(done);
                for &t in alphabet {
                    let mut p = prefix.clone();
                    p.push(t);
                    if len == max_len {
                        out.push(p);
                    } else {
                        next.push(p);
                    }
                }
            }
            frontier = next;
        }
        out
    }

    pub fn probs(speaker: &dyn SpeakerModel, ctx: &[TokenId], prefix: &[TokenId]) -> Vec<f64> {
        next_token_logprobs(speaker, ctx, prefix)
            .into_iter()
            .map(f64::exp)
            .collect()
    }

    pub fn base_score(speaker: &dyn SpeakerModel, ctx: &[TokenId], seq: &[TokenId]) -> f64 {
        (0..seq.len())
            .map(|t| probs(speaker, ctx, &seq[..t])[seq[t].index()].ln())
            .sum()
    }

    /// Σ_t log S1(o_t | i, o_<t) with S1 ∝ L(i | o_<t ∘ v)^α · S0(v | i, o_<t),
    /// where L is the normalized product of prefix likelihoods under a
    /// uniform prior over `contexts` (true input first).
    pub fn distractor_score(
        speaker: &dyn SpeakerModel,
        contexts: &[Vec<TokenId>],
        seq: &[TokenId],
        alpha: f64,
    ) -> f64 {
        let mut total = 0.0;
        let mut prefix_lik = vec![1.0; contexts.len()];
        for t in 0..seq.len() {
            let prefix = &seq[..t];
            let steps: Vec<Vec<f64>> = contexts.iter().map(|c| probs(speaker, c, prefix)).collect();
            let weights: Vec<f64> = (0..steps[0].len())
                .map(|v| {
                    if steps[0][v] == 0.0 {
                        return 0.0;
                    }
                    let joint: Vec<f64> = (0..contexts.len()).map(|j| prefix_lik[j] * steps[j][v]).collect();
                    let listener = joint[0] / joint.iter().sum::<f64>();
                    listener.powf(alpha) * steps[0][v]
                })
                .collect();
            let z: f64 = weights.iter().sum();
            let v = seq[t].index();
            total += (weights[v] / z).ln();
            for j in 0..contexts.len() {
                prefix_lik[j] *= steps[j][v];
            }
        }
        total
    }

    pub fn argmax(items: &[(Vec<TokenId>, f64, f64)]) -> Vec<TokenId> {
        let mut best = &items[0];
        for item in &items[1..] {
            if rank_order(item.1, item.2, &item.0, best.1, best.2, &best.0) == Ordering::Less {
                best = item;
            }
        }
        best.0.clone()
    }
}
