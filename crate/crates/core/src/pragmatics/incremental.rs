use std::sync::Arc;

use super::belief::{pragmatic_step, updated_log_beliefs};
use super::{rank_order, sort_candidates, DecodeConfig, ScoredCandidate};
use crate::error::{Error, Result};
use crate::speaker::{PreparedSpeaker, SpeakerModel};
use crate::vocab::{TokenId, TokenSequence};

struct Hyp {
    ids: Vec<TokenId>,
    base: f64,
    pragmatic: f64,
    log_beliefs: Vec<f64>,
}

struct Expansion {
    parent: usize,
    token: TokenId,
    base: f64,
    pragmatic: f64,
}

/// Beam search under the incremental distractor-aware speaker.
///
/// Each hypothesis carries its own belief over `[context, distractors..]`;
/// hypotheses are ranked by cumulative pragmatic log-probability. Returned
/// candidates have `combined_score` set to that sum and `listener_logprob`
/// to the final log-belief in the true input.
pub fn distractor_beam_search(
    speaker: &dyn SpeakerModel,
    context: &TokenSequence,
    distractors: &[TokenSequence],
    config: &DecodeConfig,
) -> Result<Vec<ScoredCandidate>> {
    if distractors.is_empty() {
        return Err(Error::EmptyInput(
            "distractor decoding needs at least one distractor",
        ));
    }
    let support: Arc<[TokenSequence]> = std::iter::once(context.clone())
        .chain(distractors.iter().cloned())
        .collect();
    let prepared: Vec<Box<dyn PreparedSpeaker + '_>> =
        support.iter().map(|c| speaker.prepare(&c.ids)).collect();
    let n = support.len();

    let mut active = vec![Hyp {
        ids: Vec::new(),
        base: 0.0,
        pragmatic: 0.0,
        log_beliefs: vec![-(n as f64).ln(); n],
    }];
    let mut finished: Vec<ScoredCandidate> = Vec::new();

    for step in 0..config.max_len {
        if active.is_empty() {
            break;
        }
        let mut tables = Vec::with_capacity(active.len());
        let mut expansions = Vec::new();
        for (h, hyp) in active.iter().enumerate() {
            let steps: Vec<Vec<f64>> = prepared.iter().map(|p| p.next_token_logprobs(&hyp.ids)).collect();
            let s1 = pragmatic_step(&hyp.log_beliefs, &steps, 0, config.alpha);
            for (v, lp) in s1.iter().enumerate() {
                if lp.is_finite() && steps[0][v].is_finite() {
                    expansions.push(Expansion {
                        parent: h,
                        token: TokenId(v as u32),
                        base: hyp.base + steps[0][v],
                        pragmatic: hyp.pragmatic + lp,
                    });
                }
            }
            tables.push(steps);
        }
        let cmp = |a: &Expansion, b: &Expansion| {
            rank_order(
                a.pragmatic,
                a.base,
                &active[a.parent].ids,
                b.pragmatic,
                b.base,
                &active[b.parent].ids,
            )
            .then_with(|| a.token.cmp(&b.token))
        };
        if expansions.len() > config.beam_size {
            expansions.select_nth_unstable_by(config.beam_size - 1, cmp);
            expansions.truncate(config.beam_size);
        }
        expansions.sort_by(cmp);

        let last_step = step + 1 == config.max_len;
        let mut next = Vec::with_capacity(expansions.len());
        for e in expansions {
            let parent = &active[e.parent];
            let log_beliefs = updated_log_beliefs(&parent.log_beliefs, &tables[e.parent], e.token.index())?;
            let mut ids = parent.ids.clone();
            ids.push(e.token);
            if e.token == TokenId::EOS || last_step {
                finished.push(ScoredCandidate {
                    output: TokenSequence::new(ids),
                    base_logprob: e.base,
                    listener_logprob: Some(log_beliefs[0]),
                    combined_score: Some(e.pragmatic),
                });
            } else {
                next.push(Hyp {
                    ids,
                    base: e.base,
                    pragmatic: e.pragmatic,
                    log_beliefs,
                });
            }
        }
        active = next;
    }

    sort_candidates(&mut finished);
    finished.truncate(config.beam_size);
    Ok(finished)
}

/// Best output of [`distractor_beam_search`].
pub fn pragmatic_decode_distractor(
    speaker: &dyn SpeakerModel,
    context: &TokenSequence,
    distractors: &[TokenSequence],
    config: &DecodeConfig,
) -> Result<ScoredCandidate> {
    config.validate()?;
    distractor_beam_search(speaker, context, distractors, config)?
        .into_iter()
        .next()
        .ok_or(Error::EmptyInput("decoder produced no candidates"))
}
