use super::{sort_candidates, ScoredCandidate};
use crate::error::{Error, Result};
use crate::listener::ListenerModel;
use crate::mr::Input;

/// Rescores beam candidates with `λ·log L(i | o) + (1-λ)·log S0(o | i)` and
/// re-sorts them, best first.
pub fn rerank_reconstructor(
    input: &Input,
    candidates: &[ScoredCandidate],
    listener: &dyn ListenerModel,
    lambda: f64,
) -> Result<Vec<ScoredCandidate>> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no candidates to rerank"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} outside [0, 1]")));
    }
    let mut out = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let listener_logprob = listener.reconstruction_logprob(input, &cand.output.ids)?;
        let combined = lambda * listener_logprob + (1.0 - lambda) * cand.base_logprob;
        out.push(ScoredCandidate {
            output: cand.output.clone(),
            base_logprob: cand.base_logprob,
            listener_logprob: Some(listener_logprob),
            combined_score: Some(combined),
        });
    }
    sort_candidates(&mut out);
    Ok(out)
}
