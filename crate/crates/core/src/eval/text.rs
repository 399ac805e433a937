use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::vocab::normalize_tokens;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus-level BLEU-4 on normalized tokens, scaled to [0, 100]. Clipped
/// n-gram precisions, geometric mean, brevity penalty; no smoothing.
pub fn bleu(hypotheses: &[String], references: &[String]) -> Result<f64> {
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch {
            left: hypotheses.len(),
            right: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(Error::EmptyInput("BLEU needs at least one pair"));
    }
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (h, r) in hypotheses.iter().zip(references) {
        let h = normalize_tokens(h);
        let r = normalize_tokens(r);
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=4 {
            let rc = ngram_counts(&r, n);
            for (gram, c) in ngram_counts(&h, n) {
                matches[n - 1] += c.min(rc.get(gram).copied().unwrap_or(0));
            }
            totals[n - 1] += h.len().saturating_sub(n - 1);
        }
    }
    if matches.contains(&0) {
        return Ok(0.0);
    }
    let log_precision: f64 = matches
        .iter()
        .zip(&totals)
        .map(|(m, t)| (*m as f64 / *t as f64).ln())
        .sum::<f64>()
        / 4.0;
    let bp = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok(100.0 * bp * log_precision.exp())
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L F1 (β = 1) over normalized tokens. Empty strings score 0.
pub fn rouge_l(hypothesis: &str, reference: &str) -> f64 {
    let h = normalize_tokens(hypothesis);
    let r = normalize_tokens(reference);
    let lcs = lcs_len(&h, &r);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / h.len() as f64;
    let rec = lcs as f64 / r.len() as f64;
    2.0 * p * rec / (p + rec)
}

/// Mean ROUGE-L F1 over aligned pairs.
pub fn corpus_rouge_l(hypotheses: &[String], references: &[String]) -> Result<f64> {
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch {
            left: hypotheses.len(),
            right: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(Error::EmptyInput("ROUGE-L needs at least one pair"));
    }
    let total: f64 = hypotheses
        .iter()
        .zip(references)
        .map(|(h, r)| rouge_l(h, r))
        .sum();
    Ok(total / hypotheses.len() as f64)
}
