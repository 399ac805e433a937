//! Distractor construction for distractor-based decoding.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mr::{AttributeSchema, Document, Input, MeaningRepresentation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistractorPolicy {
    /// Drop every assigned attribute and fill every unassigned one with its
    /// most frequent training value.
    MaskAll,
    /// Drop one named attribute.
    MaskSingle(String),
    /// Use the preceding unit of the same document.
    PreviousUnit,
    None,
}

impl DistractorPolicy {
    /// Rejects `MaskSingle` attributes missing from `schema`.
    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        match self {
            Self::MaskSingle(attr) if schema.get(attr).is_none() => Err(Error::InvalidParameter(format!(
                "cannot mask unknown attribute `{attr}`"
            ))),
            _ => Ok(()),
        }
    }

    /// Distractors for one MR input. `MaskSingle` on an MR that does not
    /// assign the attribute yields none, as does `None`.
    /// `PreviousUnit` needs document context; see [`previous_unit_distractor`].
    pub fn mr_distractors(
        &self,
        mr: &MeaningRepresentation,
        schema: &AttributeSchema,
        freqs: Option<&ValueFrequencyTable>,
    ) -> Result<Vec<Input>> {
        match self {
            Self::MaskAll => {
                let freqs = freqs.ok_or(Error::MissingCollaborator(
                    "mask-all needs training value frequencies",
                ))?;
                Ok(vec![Input::Mr(mask_all_distractor(mr, schema, freqs))])
            }
            Self::MaskSingle(attr) => match mask_single_distractor(mr, attr) {
                Ok(d) => Ok(vec![Input::Mr(d)]),
                Err(Error::NothingToMask(_)) => Ok(Vec::new()),
                Err(e) => Err(e),
            },
            Self::PreviousUnit => Err(Error::InvalidParameter(
                "previous-unit distractors need document context".into(),
            )),
            Self::None => Ok(Vec::new()),
        }
    }
}

impl FromStr for DistractorPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mask-all" => Ok(Self::MaskAll),
            "previous-unit" => Ok(Self::PreviousUnit),
            "none" => Ok(Self::None),
            other => match other.strip_prefix("mask-single:") {
                Some(attr) if !attr.is_empty() => Ok(Self::MaskSingle(attr.to_string())),
                _ => Err(Error::InvalidParameter(format!(
                    "unknown distractor policy `{other}` \
                     (expected mask-all, mask-single:<attr>, previous-unit or none)"
                ))),
            },
        }
    }
}

impl fmt::Display for DistractorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MaskAll => f.write_str("mask-all"),
            Self::MaskSingle(attr) => write!(f, "mask-single:{attr}"),
            Self::PreviousUnit => f.write_str("previous-unit"),
            Self::None => f.write_str("none"),
        }
    }
}

/// Per-attribute value counts over a training corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueFrequencyTable {
    counts: BTreeMap<String, BTreeMap<String, u64>>,
}

impl ValueFrequencyTable {
    pub fn count(&self, attr: &str, value: &str) -> u64 {
        self.counts
            .get(attr)
            .and_then(|row| row.get(value))
            .copied()
            .unwrap_or(0)
    }

    pub fn row(&self, attr: &str) -> Option<&BTreeMap<String, u64>> {
        self.counts.get(attr)
    }

    /// Most frequent value of `attr`. Ties go to the value listed first in
    /// the schema (values outside the schema list rank after it, by
    /// string); an attribute never seen gets its first schema value.
    pub fn most_frequent(&self, attr: &str, schema: &AttributeSchema) -> Option<String> {
        let decl = schema.get(attr)?;
        let rank = |v: &str| decl.values.iter().position(|d| d == v).unwrap_or(usize::MAX);
        let best = self.counts.get(attr).and_then(|row| {
            row.iter()
                .filter(|(_, c)| **c > 0)
                .max_by(|(va, ca), (vb, cb)| {
                    ca.cmp(cb)
                        .then_with(|| rank(vb).cmp(&rank(va)))
                        .then_with(|| vb.cmp(va))
                })
                .map(|(v, _)| v.clone())
        });
        best.or_else(|| decl.values.first().cloned())
    }
}

/// Counts assigned values per attribute. Every schema attribute gets a row.
pub fn value_frequencies(
    corpus: &[MeaningRepresentation],
    schema: &AttributeSchema,
) -> Result<ValueFrequencyTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("value frequencies need a non-empty corpus"));
    }
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> =
        schema.names().map(|n| (n.to_string(), BTreeMap::new())).collect();
    for mr in corpus {
        for (attr, value) in mr.iter() {
            if let Some(row) = counts.get_mut(attr) {
                *row.entry(value.to_string()).or_insert(0) += 1;
            }
        }
    }
    Ok(ValueFrequencyTable { counts })
}

/// Assigns each attribute absent from `mr` its most frequent value and
/// leaves every attribute present in `mr` unassigned.
pub fn mask_all_distractor(
    mr: &MeaningRepresentation,
    schema: &AttributeSchema,
    freqs: &ValueFrequencyTable,
) -> MeaningRepresentation {
    let mut out = MeaningRepresentation::new();
    for attr in schema.names() {
        if mr.contains(attr) {
            continue;
        }
        if let Some(v) = freqs.most_frequent(attr, schema) {
            out.set(attr, v);
        }
    }
    out
}

pub fn mask_single_distractor(mr: &MeaningRepresentation, attr: &str) -> Result<MeaningRepresentation> {
    let mut out = mr.clone();
    match out.remove(attr) {
        Some(_) => Ok(out),
        None => Err(Error::NothingToMask(attr.to_string())),
    }
}

/// The unit before `index`, or `None` for the first unit.
pub fn previous_unit_distractor(doc: &Document, index: usize) -> Result<Option<&Input>> {
    if index >= doc.len() {
        return Err(Error::IndexOutOfRange {
            index,
            len: doc.len(),
        });
    }
    Ok(index.checked_sub(1).map(|i| &doc.units()[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mr::linearize_mr;
    use crate::vocab::{TokenId, TokenSequence, Vocabulary};
    use proptest::prelude::*;

    fn fig1_mr() -> MeaningRepresentation {
        MeaningRepresentation::new()
            .with("name", "NAME_PLH")
            .with("eatType", "coffee shop")
            .with("food", "English")
            .with("priceRange", "cheap")
            .with("customerRating", "5 out of 5")
            .with("area", "riverside")
            .with("familyFriendly", "yes")
    }

    #[test]
    fn counts_assigned_values() {
        let schema = AttributeSchema::e2e();
        let riverside = MeaningRepresentation::new().with("area", "riverside");
        let freqs = value_frequencies(&[riverside.clone(), riverside], &schema).unwrap();
        assert_eq!(freqs.count("area", "riverside"), 2);
        assert!(freqs.row("food").unwrap().is_empty());
        assert_eq!(freqs.most_frequent("food", &schema).as_deref(), Some("Chinese"));
        assert!(value_frequencies(&[], &schema).is_err());
    }

    #[test]
    fn mixed_corpus_tally_and_ties() {
        let schema = AttributeSchema::e2e();
        let corpus: Vec<_> = [
            ("food", "Italian"),
            ("food", "French"),
            ("food", "Italian"),
            ("area", "riverside"),
            ("area", "city centre"),
            ("food", "French"),
        ]
        .iter()
        .map(|(a, v)| MeaningRepresentation::new().with(*a, *v))
        .collect();
        let freqs = value_frequencies(&corpus, &schema).unwrap();
        assert_eq!(freqs.count("food", "Italian"), 2);
        assert_eq!(freqs.count("food", "French"), 2);
        assert_eq!(freqs.count("area", "riverside"), 1);
        // French precedes Italian in the schema
        assert_eq!(freqs.most_frequent("food", &schema).as_deref(), Some("French"));
        assert_eq!(
            freqs.most_frequent("area", &schema).as_deref(),
            Some("city centre")
        );
    }

    #[test]
    fn fig1_mr_gets_only_near() {
        let schema = AttributeSchema::e2e();
        let freqs = value_frequencies(&[fig1_mr().with("near", "NEAR_PLH")], &schema).unwrap();
        let d = mask_all_distractor(&fig1_mr(), &schema, &freqs);
        assert_eq!(d, MeaningRepresentation::new().with("near", "NEAR_PLH"));
    }

    #[test]
    fn full_mr_gives_empty_distractor_and_empty_mr_gives_everything() {
        let schema = AttributeSchema::e2e();
        let full = fig1_mr().with("near", "NEAR_PLH");
        let freqs = value_frequencies(std::slice::from_ref(&full), &schema).unwrap();
        let d = mask_all_distractor(&full, &schema, &freqs);
        assert!(d.is_empty());
        let vocab = Vocabulary::build(schema.context_tokens());
        assert_eq!(linearize_mr(&d, &schema, &vocab).unwrap().ids, vec![TokenId::SEP]);

        let everything = mask_all_distractor(&MeaningRepresentation::new(), &schema, &freqs);
        assert_eq!(everything.len(), schema.len());
        assert_eq!(everything.get("food"), Some("English"));
    }

    #[test]
    fn mask_single_cases() {
        let mr = MeaningRepresentation::new()
            .with("area", "riverside")
            .with("food", "English");
        assert_eq!(
            mask_single_distractor(&mr, "area").unwrap(),
            MeaningRepresentation::new().with("food", "English")
        );
        let one = MeaningRepresentation::new().with("area", "riverside");
        assert!(mask_single_distractor(&one, "area").unwrap().is_empty());
        assert!(matches!(
            mask_single_distractor(&one, "food"),
            Err(Error::NothingToMask(_))
        ));
    }

    #[test]
    fn masking_removes_exactly_one_clause() {
        let schema = AttributeSchema::e2e();
        let vocab = Vocabulary::build(schema.context_tokens());
        let mr = fig1_mr();
        let full = linearize_mr(&mr, &schema, &vocab).unwrap().ids;
        let masked = linearize_mr(&mask_single_distractor(&mr, "food").unwrap(), &schema, &vocab)
            .unwrap()
            .ids;
        let food = vocab.id("food").unwrap();
        let english = vocab.id("english").unwrap();
        let pos = full.iter().position(|t| *t == food).unwrap();
        assert_eq!(full[pos + 1], english);
        let mut expected = full.clone();
        expected.drain(pos..pos + 2);
        assert_eq!(masked, expected);
    }

    #[test]
    fn previous_unit_cases() {
        let units: Vec<Input> = (0..3)
            .map(|i| Input::Tokens(TokenSequence::new(vec![TokenId(6 + i)])))
            .collect();
        let doc = Document::new(units.clone()).unwrap();
        assert_eq!(previous_unit_distractor(&doc, 0).unwrap(), None);
        assert_eq!(previous_unit_distractor(&doc, 2).unwrap(), Some(&units[1]));
        assert!(previous_unit_distractor(&doc, 3).is_err());
        let single = Document::new(vec![units[0].clone()]).unwrap();
        assert_eq!(previous_unit_distractor(&single, 0).unwrap(), None);
        let nones = (0..doc.len())
            .filter(|&i| previous_unit_distractor(&doc, i).unwrap().is_none())
            .count();
        assert_eq!(nones, 1);
    }

    #[test]
    fn policy_syntax_round_trips() {
        for s in ["mask-all", "mask-single:area", "previous-unit", "none"] {
            assert_eq!(s.parse::<DistractorPolicy>().unwrap().to_string(), s);
        }
        assert!("mask-single:".parse::<DistractorPolicy>().is_err());
        assert!("random".parse::<DistractorPolicy>().is_err());
        let schema = AttributeSchema::e2e();
        assert!(DistractorPolicy::MaskSingle("colour".into())
            .validate(&schema)
            .is_err());
    }

    fn arb_mr() -> impl Strategy<Value = MeaningRepresentation> {
        let schema = AttributeSchema::e2e();
        let attrs: Vec<_> = schema
            .attributes
            .iter()
            .map(|a| (a.name.clone(), a.values.clone()))
            .collect();
        proptest::collection::vec((any::<bool>(), any::<prop::sample::Index>()), attrs.len()).prop_map(
            move |picks| {
                attrs
                    .iter()
                    .zip(picks)
                    .filter(|(_, (on, _))| *on)
                    .map(|((n, vals), (_, ix))| (n.clone(), ix.get(vals).clone()))
                    .collect()
            },
        )
    }

    proptest! {
        #[test]
        fn mask_all_is_the_complement(mr in arb_mr(), corpus in proptest::collection::vec(arb_mr(), 1..8)) {
            let schema = AttributeSchema::e2e();
            let freqs = value_frequencies(&corpus, &schema).unwrap();
            let d = mask_all_distractor(&mr, &schema, &freqs);
            for attr in schema.names() {
                prop_assert!(mr.contains(attr) != d.contains(attr));
            }
        }

        #[test]
        fn mask_single_touches_one_attribute(mr in arb_mr()) {
            for (attr, _) in mr.iter() {
                let d = mask_single_distractor(&mr, attr).unwrap();
                prop_assert!(!d.contains(attr));
                prop_assert_eq!(d.len() + 1, mr.len());
                for (a, v) in d.iter() {
                    prop_assert_eq!(mr.get(a), Some(v));
                }
            }
        }
    }
}
