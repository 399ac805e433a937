use super::{rank_order, sort_candidates, DecodeConfig, ScoredCandidate};
use crate::speaker::SpeakerModel;
use crate::vocab::{TokenId, TokenSequence};

struct Hyp {
    ids: Vec<TokenId>,
    score: f64,
}

/// Beam search over the base speaker. Returns up to `beam_size` outputs,
/// each EOS-terminated or `max_len` long, best first.
///
/// Each step expands every live hypothesis by every token with finite
/// probability and keeps the best `beam_size` expansions; those ending in
/// EOS (or reaching `max_len`) leave the beam.
pub fn beam_search(
    speaker: &dyn SpeakerModel,
    context: &[TokenId],
    config: &DecodeConfig,
) -> Vec<ScoredCandidate> {
    let prepared = speaker.prepare(context);
    let mut active = vec![Hyp {
        ids: Vec::new(),
        score: 0.0,
    }];
    let mut finished: Vec<ScoredCandidate> = Vec::new();

    for step in 0..config.max_len {
        if active.is_empty() {
            break;
        }
        let mut expansions: Vec<(usize, TokenId, f64)> = Vec::new();
        for (h, hyp) in active.iter().enumerate() {
            let lp = prepared.next_token_logprobs(&hyp.ids);
            for (v, l) in lp.iter().enumerate() {
                if l.is_finite() {
                    expansions.push((h, TokenId(v as u32), hyp.score + l));
                }
            }
        }
        // hypotheses share a length, so (parent ids, token) is the
        // lexicographic order of the extended sequences
        let cmp = |a: &(usize, TokenId, f64), b: &(usize, TokenId, f64)| {
            rank_order(a.2, a.2, &active[a.0].ids, b.2, b.2, &active[b.0].ids).then_with(|| a.1.cmp(&b.1))
        };
        if expansions.len() > config.beam_size {
            expansions.select_nth_unstable_by(config.beam_size - 1, cmp);
            expansions.truncate(config.beam_size);
        }
        expansions.sort_by(cmp);

        let last_step = step + 1 == config.max_len;
        let mut next = Vec::with_capacity(expansions.len());
        for (h, tok, score) in expansions {
            let mut ids = active[h].ids.clone();
            ids.push(tok);
            if tok == TokenId::EOS || last_step {
                finished.push(ScoredCandidate::base(TokenSequence::new(ids), score));
            } else {
                next.push(Hyp { ids, score });
            }
        }
        active = next;
    }

    sort_candidates(&mut finished);
    finished.truncate(config.beam_size);
    finished
}
