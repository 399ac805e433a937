use std::sync::Arc;

use super::{PreparedSpeaker, SpeakerModel};
use crate::error::{Error, Result};
use crate::logspace::log_softmax;
use crate::vocab::{TokenId, Vocabulary};

/// Two speakers combined per step as `log_softmax(w·log P_A + (1-w)·log P_B)`.
#[derive(Clone)]
pub struct EnsembleSpeaker {
    a: Arc<dyn SpeakerModel>,
    b: Arc<dyn SpeakerModel>,
    w: f64,
}

impl std::fmt::Debug for EnsembleSpeaker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnsembleSpeaker")
            .field("w", &self.w)
            .finish_non_exhaustive()
    }
}

impl EnsembleSpeaker {
    pub fn new(a: Arc<dyn SpeakerModel>, b: Arc<dyn SpeakerModel>, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!(
                "ensemble weight {w} outside [0, 1]"
            )));
        }
        if a.vocab() != b.vocab() {
            return Err(Error::VocabularyMismatch("ensemble members"));
        }
        Ok(Self { a, b, w })
    }

    pub fn weight(&self) -> f64 {
        self.w
    }
}

struct PreparedEnsemble<'a> {
    a: Box<dyn PreparedSpeaker + 'a>,
    b: Box<dyn PreparedSpeaker + 'a>,
    w: f64,
}

impl SpeakerModel for EnsembleSpeaker {
    fn vocab(&self) -> &Vocabulary {
        self.a.vocab()
    }

    fn prepare<'a>(&'a self, context: &[TokenId]) -> Box<dyn PreparedSpeaker + 'a> {
        Box::new(PreparedEnsemble {
            a: self.a.prepare(context),
            b: self.b.prepare(context),
            w: self.w,
        })
    }
}

impl PreparedSpeaker for PreparedEnsemble<'_> {
    fn next_token_logprobs(&self, prefix: &[TokenId]) -> Vec<f64> {
        let la = self.a.next_token_logprobs(prefix);
        let lb = self.b.next_token_logprobs(prefix);
        let mixed: Vec<f64> = la
            .iter()
            .zip(&lb)
            .map(|(x, y)| self.w * x + (1.0 - self.w) * y)
            .collect();
        log_softmax(&mixed).expect("member distributions are finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speaker::{next_token_logprobs, train_ngram_speaker, NGramConfig, TrainingPair};
    use crate::vocab::TokenSequence;

    fn members() -> (Arc<dyn SpeakerModel>, Arc<dyn SpeakerModel>) {
        let vocab = Vocabulary::build(["a", "b", "c"]);
        let ids = |ws: &[&str]| TokenSequence::new(ws.iter().map(|w| vocab.id(w).unwrap()).collect());
        let one = [TrainingPair {
            context: ids(&["a"]),
            output: ids(&["a", "b"]),
        }];
        let two = [
            TrainingPair {
                context: ids(&["b"]),
                output: ids(&["c", "c"]),
            },
            TrainingPair {
                context: ids(&["a"]),
                output: ids(&["b"]),
            },
        ];
        let a = train_ngram_speaker(&one, &vocab, NGramConfig::default()).unwrap();
        let b = train_ngram_speaker(&two, &vocab, NGramConfig::default()).unwrap();
        (Arc::new(a), Arc::new(b))
    }

    fn queries() -> Vec<(Vec<TokenId>, Vec<TokenId>)> {
        vec![
            (vec![TokenId(6)], vec![]),
            (vec![TokenId(7)], vec![TokenId(8)]),
            (vec![TokenId(6), TokenId::SEP], vec![TokenId(6), TokenId(7)]),
        ]
    }

    #[test]
    fn weight_one_reproduces_member_a() {
        let (a, b) = members();
        let ens = EnsembleSpeaker::new(a.clone(), b, 1.0).unwrap();
        for (ctx, prefix) in queries() {
            let e = next_token_logprobs(&ens, &ctx, &prefix);
            let x = next_token_logprobs(a.as_ref(), &ctx, &prefix);
            for (p, q) in e.iter().zip(&x) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_members_equal_either_member() {
        let (a, _) = members();
        for w in [0.0, 0.3, 0.5, 1.0] {
            let ens = EnsembleSpeaker::new(a.clone(), a.clone(), w).unwrap();
            for (ctx, prefix) in queries() {
                let e = next_token_logprobs(&ens, &ctx, &prefix);
                let x = next_token_logprobs(a.as_ref(), &ctx, &prefix);
                for (p, q) in e.iter().zip(&x) {
                    assert!((p.exp() - q.exp()).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixture_normalizes_and_rejects_bad_weight() {
        let (a, b) = members();
        let ens = EnsembleSpeaker::new(a.clone(), b.clone(), 0.3).unwrap();
        for (ctx, prefix) in queries() {
            let sum: f64 = next_token_logprobs(&ens, &ctx, &prefix)
                .iter()
                .map(|x| x.exp())
                .sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        assert!(EnsembleSpeaker::new(a, b, 1.2).is_err());
    }
}
