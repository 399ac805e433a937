use std::sync::Arc;

use super::ListenerModel;
use crate::error::{Error, Result};
use crate::mr::{AttributeSchema, Input};
use crate::speaker::{sequence_logprob, SpeakerModel, TrainingPair};
use crate::vocab::{TokenId, TokenSequence, Vocabulary};

/// Swaps each pair: the output text (plus SEP) becomes the context and the
/// original context becomes the output.
pub fn reverse_pairs(pairs: &[TrainingPair]) -> Vec<TrainingPair> {
    pairs
        .iter()
        .map(|p| {
            let mut context = p.output.body().to_vec();
            context.push(TokenId::SEP);
            TrainingPair {
                context: TokenSequence::new(context),
                output: TokenSequence::new(p.context.body().to_vec()),
            }
        })
        .collect()
}

/// A speaker trained output-to-input, scoring `log P(lin(i) ; EOS | o)`.
#[derive(Clone)]
pub struct ReverseSpeakerListener {
    model: Arc<dyn SpeakerModel>,
    schema: AttributeSchema,
}

impl std::fmt::Debug for ReverseSpeakerListener {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReverseSpeakerListener").finish_non_exhaustive()
    }
}

impl ReverseSpeakerListener {
    pub fn new(model: Arc<dyn SpeakerModel>, schema: AttributeSchema) -> Self {
        Self { model, schema }
    }

    pub fn model(&self) -> &dyn SpeakerModel {
        self.model.as_ref()
    }
}

impl ListenerModel for ReverseSpeakerListener {
    fn vocab(&self) -> &Vocabulary {
        self.model.vocab()
    }

    fn reconstruction_logprob(&self, input: &Input, output: &[TokenId]) -> Result<f64> {
        let vocab = self.model.vocab();
        let target = input.context(&self.schema, vocab)?.terminated();
        let text = Input::Tokens(TokenSequence::new(output.to_vec()));
        let context = text.context(&self.schema, vocab)?;
        sequence_logprob(self.model.as_ref(), &context.ids, &target).map_err(|e| match e {
            Error::Unterminated => unreachable!("target is terminated"),
            other => other,
        })
    }
}
