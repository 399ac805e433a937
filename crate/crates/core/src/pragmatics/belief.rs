use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logspace::{log_softmax, log_sum_exp};
use crate::speaker::SpeakerModel;
use crate::vocab::{TokenId, TokenSequence};

/// A distribution over candidate inputs (true input first), stored as
/// log-probabilities aligned with `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    support: Arc<[TokenSequence]>,
    log_beliefs: Vec<f64>,
}

impl BeliefState {
    /// Uniform belief over `support`, given as speaker contexts.
    pub fn uniform(support: Vec<TokenSequence>) -> Result<Self> {
        if support.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "belief support needs at least 2 inputs, got {}",
                support.len()
            )));
        }
        let n = support.len();
        Ok(Self {
            support: support.into(),
            log_beliefs: vec![-(n as f64).ln(); n],
        })
    }

    /// Builds a state from explicit log-beliefs, renormalizing them.
    pub fn with_log_beliefs(support: Vec<TokenSequence>, log_beliefs: &[f64]) -> Result<Self> {
        let state = Self::uniform(support)?;
        if log_beliefs.len() != state.support.len() {
            return Err(Error::LengthMismatch {
                left: state.support.len(),
                right: log_beliefs.len(),
            });
        }
        let z = log_sum_exp(log_beliefs);
        if !z.is_finite() {
            return Err(Error::DegenerateDistribution);
        }
        Ok(Self {
            log_beliefs: log_beliefs.iter().map(|b| b - z).collect(),
            ..state
        })
    }

    pub fn support(&self) -> &[TokenSequence] {
        &self.support
    }

    pub fn log_beliefs(&self) -> &[f64] {
        &self.log_beliefs
    }

    pub fn beliefs(&self) -> Vec<f64> {
        self.log_beliefs.iter().map(|b| b.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub(crate) fn shared_support(&self) -> Arc<[TokenSequence]> {
        self.support.clone()
    }

    pub(crate) fn from_parts(support: Arc<[TokenSequence]>, log_beliefs: Vec<f64>) -> Self {
        Self { support, log_beliefs }
    }
}

/// Log-belief of support item `j` after observing `token`, given each
/// item's step log-probabilities.
///
/// Computed as `-log Σ_m exp(a_m - a_j)` with `a_m = old_m + s_m[token]`,
/// so items with identical scores get bit-identical beliefs.
pub(crate) fn updated_log_belief(old: &[f64], steps: &[Vec<f64>], token: usize, j: usize) -> f64 {
    let own = old[j] + steps[j][token];
    if own == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let diffs: Vec<f64> = old.iter().zip(steps).map(|(o, s)| (o + s[token]) - own).collect();
    -log_sum_exp(&diffs)
}

pub(crate) fn updated_log_beliefs(old: &[f64], steps: &[Vec<f64>], token: usize) -> Result<Vec<f64>> {
    let out: Vec<f64> = (0..old.len())
        .map(|j| updated_log_belief(old, steps, token, j))
        .collect();
    if out.iter().all(|b| *b == f64::NEG_INFINITY) {
        return Err(Error::BeliefCollapse);
    }
    Ok(out)
}

/// Pragmatic step distribution `log S1(v)` from per-support step scores.
pub(crate) fn pragmatic_step(old: &[f64], steps: &[Vec<f64>], index: usize, alpha: f64) -> Vec<f64> {
    let base = &steps[index];
    if alpha == 0.0 {
        return base.clone();
    }
    let listener: Vec<f64> = (0..base.len())
        .map(|v| {
            if base[v] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                updated_log_belief(old, steps, v, index)
            }
        })
        .collect();
    // a listener factor that is constant over the tokens the speaker allows
    // cancels under normalization
    let mut finite = listener.iter().zip(base).filter(|(_, b)| b.is_finite());
    if let Some((first, _)) = finite.next() {
        if finite.all(|(l, _)| l == first) {
            return base.clone();
        }
    }
    let scores: Vec<f64> = listener
        .iter()
        .zip(base)
        .map(|(l, b)| {
            if *b == f64::NEG_INFINITY {
                *b
            } else {
                alpha * l + b
            }
        })
        .collect();
    log_softmax(&scores).unwrap_or_else(|_| base.clone())
}

fn step_table(speaker: &dyn SpeakerModel, support: &[TokenSequence], prefix: &[TokenId]) -> Vec<Vec<f64>> {
    support
        .iter()
        .map(|c| speaker.prepare(&c.ids).next_token_logprobs(prefix))
        .collect()
}

/// Belief after `token` follows `prefix`: `p'(j) ∝ S0(token | j, prefix)·p(j)`.
pub fn belief_update(
    belief: &BeliefState,
    speaker: &dyn SpeakerModel,
    prefix: &[TokenId],
    token: TokenId,
) -> Result<BeliefState> {
    let size = speaker.vocab().len();
    if token.index() >= size {
        return Err(Error::TokenOutOfRange { id: token.0, size });
    }
    let steps = step_table(speaker, &belief.support, prefix);
    let log_beliefs = updated_log_beliefs(&belief.log_beliefs, &steps, token.index())?;
    Ok(BeliefState::from_parts(belief.shared_support(), log_beliefs))
}

/// Log-probabilities of the pragmatic speaker's next token for support item
/// `input_index`: `α·log p'(input | prefix ∘ v) + log S0(v | input, prefix)`,
/// normalized over the vocabulary.
pub fn distractor_step_scores(
    speaker: &dyn SpeakerModel,
    belief: &BeliefState,
    input_index: usize,
    prefix: &[TokenId],
    alpha: f64,
) -> Result<Vec<f64>> {
    if input_index >= belief.len() {
        return Err(Error::IndexOutOfRange {
            index: input_index,
            len: belief.len(),
        });
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    let steps = step_table(speaker, &belief.support, prefix);
    Ok(pragmatic_step(&belief.log_beliefs, &steps, input_index, alpha))
}

/// Direct form: `log p(j) ∝ log S0(prefix | j)` under a uniform prior.
#[cfg(test)]
pub(crate) fn direct_log_beliefs(
    speaker: &dyn SpeakerModel,
    support: &[TokenSequence],
    prefix: &[TokenId],
) -> Vec<f64> {
    let liks: Vec<f64> = support
        .iter()
        .map(|c| {
            let p = speaker.prepare(&c.ids);
            (0..prefix.len())
                .map(|t| p.next_token_logprobs(&prefix[..t])[prefix[t].index()])
                .sum()
        })
        .collect();
    crate::logspace::log_normalize(&liks)
        .expect("finite likelihoods")
        .into_iter()
        .map(f64::ln)
        .collect()
}
