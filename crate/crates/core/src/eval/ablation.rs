use rayon::prelude::*;
use serde::Serialize;

use super::coverage::{coverage_ratio, CoverageMatcher};
use crate::data::CorpusRecord;
use crate::distractor::mask_single_distractor;
use crate::error::{Error, Result};
use crate::mr::{AttributeSchema, Input};
use crate::pipeline::{render, Decoder};
use crate::pragmatics::{DecodeConfig, DecodeMode};
use crate::speaker::SpeakerModel;

pub const BASE_ROW: &str = "BASE";

/// Coverage ratios: one row for the base speaker, then one per masked
/// attribute; columns are the measured attributes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationMatrix {
    pub attributes: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl AblationMatrix {
    pub fn base_row(&self) -> &[f64] {
        &self.rows[0].1
    }

    pub fn row(&self, masked: &str) -> Option<&[f64]> {
        self.rows
            .iter()
            .find(|(name, _)| name == masked)
            .map(|(_, r)| r.as_slice())
    }

    /// Cell (masked = a, measured = a) for each attribute, in column order.
    pub fn diagonal(&self) -> Vec<f64> {
        self.attributes
            .iter()
            .enumerate()
            .map(|(j, a)| self.row(a).map_or(f64::NAN, |r| r[j]))
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("masked").chain(self.attributes.iter().map(String::as_str));
        let csv_err = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        w.write_record(header).map_err(csv_err)?;
        for (name, cells) in &self.rows {
            let fields = std::iter::once(name.clone()).chain(cells.iter().map(|c| c.to_string()));
            w.write_record(fields).map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Masking ablation over the schema's literally realized attributes.
///
/// The base row decodes every record with plain beam search. The row for
/// attribute `a` re-decodes each record assigning `a` against the distractor
/// that drops `a`; records without `a` keep their base output.
pub fn ablation_matrix(
    speaker: &dyn SpeakerModel,
    records: &[CorpusRecord],
    schema: &AttributeSchema,
    config: &DecodeConfig,
    matcher: &CoverageMatcher,
) -> Result<AblationMatrix> {
    config.validate()?;
    let attributes = schema.lexical_attributes();
    let vocab = speaker.vocab();
    let base_decoder = Decoder::base(speaker, schema, *config);
    let base = render(&base_decoder.decode(records)?, vocab);

    let masked_decoder = Decoder {
        config: config.with_mode(DecodeMode::Distractor),
        ..Decoder::base(speaker, schema, *config)
    };
    let jobs: Vec<(usize, usize)> = attributes
        .iter()
        .enumerate()
        .flat_map(|(a, attr)| {
            records
                .iter()
                .enumerate()
                .filter(move |(_, r)| r.mr.contains(attr))
                .map(move |(i, _)| (a, i))
        })
        .collect();
    let decoded: Vec<String> = jobs
        .par_iter()
        .map(|&(a, i)| {
            let distractor = mask_single_distractor(&records[i].mr, &attributes[a])?;
            let out = masked_decoder.decode_one(&records[i], &[Input::Mr(distractor)])?;
            Ok(render(std::slice::from_ref(&out), vocab).remove(0))
        })
        .collect::<Result<_>>()?;

    let coverage_row = |outputs: &[String]| -> Result<Vec<f64>> {
        attributes
            .iter()
            .map(|m| coverage_ratio(records, outputs, m, matcher))
            .collect()
    };
    let mut rows = vec![(BASE_ROW.to_string(), coverage_row(&base)?)];
    let mut outputs: Vec<Vec<String>> = vec![base.clone(); attributes.len()];
    for (&(a, i), text) in jobs.iter().zip(decoded) {
        outputs[a][i] = text;
    }
    for (attr, outs) in attributes.iter().zip(&outputs) {
        rows.push((attr.clone(), coverage_row(outs)?));
    }
    Ok(AblationMatrix { attributes, rows })
}
