//! Input-conditioned lexical factor for the n-gram speaker.
//!
//! A word-to-word translation table `t(v | u)` between context tokens `u` and
//! output tokens `v`, estimated with a few EM iterations of IBM Model 1
//! (uniform alignment, SEP acting as the null word, which alone emits EOS).
//! At scoring time the context-averaged translation probability is compared
//! to the output unigram background, giving a per-token log boost that is
//! positive for tokens the input makes more likely and negative for tokens
//! it argues against.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TrainingPair;
use crate::error::{Error, Result};
use crate::vocab::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalModel {
    k: f64,
    vocab_size: usize,
    iterations: usize,
    unigram: BTreeMap<TokenId, u64>,
    table: BTreeMap<TokenId, BTreeMap<TokenId, f64>>,
    totals: BTreeMap<TokenId, f64>,
    log_background: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct LexicalFile {
    iterations: usize,
    unigram: BTreeMap<String, u64>,
    table: BTreeMap<String, BTreeMap<String, f64>>,
}

type Table = BTreeMap<TokenId, BTreeMap<TokenId, f64>>;

impl LexicalModel {
    pub fn train(pairs: &[TrainingPair], vocab_size: usize, k: f64, iterations: usize) -> Self {
        let mut unigram = BTreeMap::new();
        for pair in pairs {
            for id in pair.output.body().iter().chain([&TokenId::EOS]) {
                *unigram.entry(*id).or_insert(0u64) += 1;
            }
        }

        let mut table: Table = BTreeMap::new();
        for iter in 0..iterations.max(1) {
            let previous = (iter > 0).then(|| {
                let totals = canonical_totals(&table);
                (std::mem::take(&mut table), totals)
            });
            for pair in pairs {
                let context = &pair.context.ids;
                if context.is_empty() {
                    continue;
                }
                let has_null = context.contains(&TokenId::SEP);
                for v in pair.output.body().iter().chain([&TokenId::EOS]) {
                    let mut weights: Vec<f64> = match &previous {
                        None => vec![1.0; context.len()],
                        Some((prev, totals)) => context
                            .iter()
                            .map(|u| {
                                let count = prev.get(u).and_then(|row| row.get(v)).copied();
                                count.unwrap_or(0.0) / totals.get(u).copied().unwrap_or(1.0)
                            })
                            .collect(),
                    };
                    if *v == TokenId::EOS && has_null {
                        for (w, u) in weights.iter_mut().zip(context) {
                            if *u != TokenId::SEP {
                                *w = 0.0;
                            }
                        }
                    }
                    let denom: f64 = weights.iter().sum();
                    if denom <= 0.0 {
                        continue;
                    }
                    for (u, w) in context.iter().zip(weights) {
                        *table.entry(*u).or_default().entry(*v).or_insert(0.0) += w / denom;
                    }
                }
            }
        }
        Self::assemble(k, vocab_size, iterations.max(1), unigram, table)
    }

    fn assemble(
        k: f64,
        vocab_size: usize,
        iterations: usize,
        unigram: BTreeMap<TokenId, u64>,
        table: Table,
    ) -> Self {
        let totals = canonical_totals(&table);
        let n: u64 = unigram.values().sum();
        let denom = n as f64 + k * vocab_size as f64;
        let log_background = (0..vocab_size as u32)
            .map(|v| {
                let c = unigram.get(&TokenId(v)).copied().unwrap_or(0) as f64;
                ((c + k) / denom).ln()
            })
            .collect();
        Self {
            k,
            vocab_size,
            iterations,
            unigram,
            table,
            totals,
            log_background,
        }
    }

    /// Smoothed rows `t(· | u)` for each context token, in context order.
    pub fn bind(&self, context: &[TokenId]) -> BoundLexicon {
        let mu = self.k * self.vocab_size as f64;
        let rows = context
            .iter()
            .map(|u| {
                let denom = self.totals.get(u).copied().unwrap_or(0.0) + mu;
                let mut row: Vec<f64> = self
                    .log_background
                    .iter()
                    .map(|lb| mu * lb.exp() / denom)
                    .collect();
                if let Some(counts) = self.table.get(u) {
                    for (v, c) in counts {
                        row[v.index()] += c / denom;
                    }
                }
                (*u == TokenId::SEP, row)
            })
            .collect();
        BoundLexicon {
            rows,
            log_background: self.log_background.clone(),
        }
    }

    /// `ln t̄(v | context) - ln P_bg(v)` for every vocabulary item, before
    /// any output has been produced.
    pub fn log_boost(&self, context: &[TokenId]) -> Vec<f64> {
        self.bind(context).log_boost(&[])
    }

    pub(super) fn to_file(&self) -> LexicalFile {
        LexicalFile {
            iterations: self.iterations,
            unigram: self.unigram.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            table: self
                .table
                .iter()
                .map(|(u, row)| {
                    (
                        u.to_string(),
                        row.iter().map(|(v, c)| (v.to_string(), *c)).collect(),
                    )
                })
                .collect(),
        }
    }

    pub(super) fn from_file(file: LexicalFile, k: f64, vocab_size: usize) -> Result<Self> {
        let parse = |s: &str| -> Result<TokenId> {
            let id: u32 = s
                .parse()
                .map_err(|_| Error::Model(format!("bad token id `{s}` in lexical table")))?;
            if id as usize >= vocab_size {
                return Err(Error::TokenOutOfRange { id, size: vocab_size });
            }
            Ok(TokenId(id))
        };
        let mut unigram = BTreeMap::new();
        for (key, count) in file.unigram {
            unigram.insert(parse(&key)?, count);
        }
        let mut table: Table = BTreeMap::new();
        for (u, row) in file.table {
            let u = parse(&u)?;
            for (v, count) in row {
                if !(count.is_finite() && count >= 0.0) {
                    return Err(Error::Model("negative lexical count".into()));
                }
                table.entry(u).or_default().insert(parse(&v)?, count);
            }
        }
        Ok(Self::assemble(k, vocab_size, file.iterations, unigram, table))
    }
}

/// A lexical model bound to one context.
///
/// Each context token carries a coverage weight `1 - min(1, c_u)`, where
/// `c_u` is the alignment mass the prefix has already drawn from it
/// (`Σ_t t(o_t | u) / Σ_u' t(o_t | u')`). The boost averages `t(v | u)`
/// under these weights, so realized input content stops being pushed.
/// The EOS boost is the log of the null word's (SEP's) share of the
/// remaining weight: strongly negative while input content is uncovered,
/// and 0 once all of it is.
#[derive(Debug, Clone)]
pub struct BoundLexicon {
    rows: Vec<(bool, Vec<f64>)>,
    log_background: Vec<f64>,
}

impl BoundLexicon {
    pub fn log_boost(&self, prefix: &[TokenId]) -> Vec<f64> {
        let size = self.log_background.len();
        if self.rows.is_empty() {
            return vec![0.0; size];
        }
        let mut coverage = vec![0.0; self.rows.len()];
        for tok in prefix {
            let v = tok.index();
            if v >= size {
                continue;
            }
            let z: f64 = self.rows.iter().map(|(_, r)| r[v]).sum();
            for (c, (_, r)) in coverage.iter_mut().zip(&self.rows) {
                *c += r[v] / z;
            }
        }
        let mut acc = vec![0.0; size];
        let mut mass = 0.0;
        for ((null, row), c) in self.rows.iter().zip(coverage) {
            let w = if *null { 1.0 } else { 1.0 - c.min(1.0) };
            if w <= 0.0 {
                continue;
            }
            mass += w;
            for (a, t) in acc.iter_mut().zip(row) {
                *a += w * t;
            }
        }
        if mass <= 0.0 {
            return vec![0.0; size];
        }
        let mut boost: Vec<f64> = acc
            .iter()
            .zip(&self.log_background)
            .map(|(a, lb)| (a / mass).ln() - lb)
            .collect();
        let nulls = self.rows.iter().filter(|(null, _)| *null).count();
        if nulls > 0 && TokenId::EOS.index() < size {
            boost[TokenId::EOS.index()] = (nulls as f64 / mass).ln();
        }
        boost
    }
}

fn canonical_totals(table: &Table) -> BTreeMap<TokenId, f64> {
    table.iter().map(|(u, row)| (*u, row.values().sum())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::TokenSequence;

    fn pair(ctx: &[u32], out: &[u32]) -> TrainingPair {
        TrainingPair {
            context: TokenSequence::new(ctx.iter().map(|&i| TokenId(i)).collect()),
            output: TokenSequence::new(out.iter().map(|&i| TokenId(i)).collect()),
        }
    }

    #[test]
    fn aligned_words_get_boosted() {
        // context word 6 always yields output word 8, context word 7 yields 9
        let pairs = vec![
            pair(&[6, 2], &[10, 8]),
            pair(&[7, 2], &[10, 9]),
            pair(&[6, 2], &[10, 8]),
            pair(&[7, 2], &[10, 9]),
        ];
        let lex = LexicalModel::train(&pairs, 11, 0.1, 5);
        let with_6 = lex.log_boost(&[TokenId(6), TokenId::SEP]);
        let with_7 = lex.log_boost(&[TokenId(7), TokenId::SEP]);
        assert!(with_6[8] > 0.0 && with_6[9] < 0.0);
        assert!(with_7[9] > 0.0 && with_7[8] < 0.0);
        // the shared word is roughly neutral under either input
        assert!((with_6[10] - with_7[10]).abs() < 1e-9);
    }

    #[test]
    fn unknown_context_is_neutral() {
        let lex = LexicalModel::train(&[pair(&[6, 2], &[8])], 11, 0.1, 3);
        let boost = lex.log_boost(&[TokenId(9)]);
        assert!(boost.iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn file_round_trip_preserves_scores() {
        let pairs = vec![pair(&[6, 7, 2], &[8, 9, 10]), pair(&[7, 2], &[9, 8])];
        let lex = LexicalModel::train(&pairs, 11, 0.1, 4);
        let json = serde_json::to_string(&lex.to_file()).unwrap();
        let back = LexicalModel::from_file(serde_json::from_str(&json).unwrap(), 0.1, 11).unwrap();
        let ctx = [TokenId(6), TokenId(2)];
        assert_eq!(lex.log_boost(&ctx), back.log_boost(&ctx));
    }

    #[test]
    fn realized_content_stops_being_boosted() {
        let pairs = vec![
            pair(&[6, 2], &[10, 8]),
            pair(&[7, 2], &[10, 9]),
            pair(&[6, 7, 2], &[10, 8, 9]),
        ];
        let lex = LexicalModel::train(&pairs, 11, 0.1, 5);
        let bound = lex.bind(&[TokenId(6), TokenId(7), TokenId::SEP]);
        let fresh = bound.log_boost(&[]);
        let after = bound.log_boost(&[TokenId(10), TokenId(8)]);
        assert!(after[8] < fresh[8]);
        assert!(after[9] > fresh[9]);
        assert!(after[TokenId::EOS.index()] > fresh[TokenId::EOS.index()]);
    }
}
