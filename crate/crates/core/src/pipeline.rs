//! Corpus-level decoding: builds each record's distractors from a policy and
//! decodes records in parallel, keeping input order.

use rayon::prelude::*;

use crate::data::{group_documents, CorpusRecord};
use crate::distractor::{DistractorPolicy, ValueFrequencyTable};
use crate::error::Result;
use crate::listener::ListenerModel;
use crate::mr::{AttributeSchema, Input};
use crate::pragmatics::{generate, DecodeConfig, DecodeMode, ScoredCandidate};
use crate::speaker::SpeakerModel;
use crate::vocab::{detokenize, Vocabulary};

pub struct Decoder<'a> {
    pub speaker: &'a dyn SpeakerModel,
    pub listener: Option<&'a dyn ListenerModel>,
    pub schema: &'a AttributeSchema,
    pub config: DecodeConfig,
    pub policy: DistractorPolicy,
    pub freqs: Option<&'a ValueFrequencyTable>,
}

impl<'a> Decoder<'a> {
    pub fn base(speaker: &'a dyn SpeakerModel, schema: &'a AttributeSchema, config: DecodeConfig) -> Self {
        Self {
            speaker,
            listener: None,
            schema,
            config: config.with_mode(DecodeMode::Base),
            policy: DistractorPolicy::None,
            freqs: None,
        }
    }

    /// Distractor inputs for every record under the configured policy.
    pub fn distractors(&self, records: &[CorpusRecord]) -> Result<Vec<Vec<Input>>> {
        self.policy.validate(self.schema)?;
        if self.policy == DistractorPolicy::PreviousUnit {
            let mut out = vec![Vec::new(); records.len()];
            for doc in group_documents(records) {
                for pair in doc.windows(2) {
                    out[pair[1]] = vec![Input::Mr(records[pair[0]].mr.clone())];
                }
            }
            return Ok(out);
        }
        records
            .iter()
            .map(|r| self.policy.mr_distractors(&r.mr, self.schema, self.freqs))
            .collect()
    }

    /// Decodes one record with explicit distractors.
    pub fn decode_one(&self, record: &CorpusRecord, distractors: &[Input]) -> Result<ScoredCandidate> {
        let input = Input::Mr(record.mr.clone());
        let distractors = (self.config.mode == DecodeMode::Distractor).then_some(distractors);
        generate(
            self.speaker,
            self.listener,
            self.schema,
            &input,
            distractors,
            &self.config,
        )
    }

    /// Best output per record, in record order.
    pub fn decode(&self, records: &[CorpusRecord]) -> Result<Vec<ScoredCandidate>> {
        let distractors = match self.config.mode {
            DecodeMode::Distractor => self.distractors(records)?,
            _ => vec![Vec::new(); records.len()],
        };
        records
            .par_iter()
            .zip(distractors.par_iter())
            .map(|(r, d)| self.decode_one(r, d))
            .collect()
    }
}

/// Output texts, still delexicalized.
pub fn render(candidates: &[ScoredCandidate], vocab: &Vocabulary) -> Vec<String> {
    candidates.iter().map(|c| detokenize(&c.output, vocab)).collect()
}
