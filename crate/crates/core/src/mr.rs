//! Attribute schemas, meaning representations and their linearization.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{normalize_tokens, TokenId, TokenSequence, Vocabulary};

const E2E_SCHEMA: &str = include_str!("../assets/e2e_schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical,
    Delexicalized,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<Vec<String>>,
}

impl Attribute {
    /// The placeholder token a delexicalized attribute stands in for.
    pub fn placeholder(&self) -> Option<&str> {
        match self.kind {
            AttributeKind::Delexicalized => self.values.first().map(String::as_str),
            _ => None,
        }
    }

    /// Case-insensitive lookup of a value in the declared value set.
    pub fn canonical_value(&self, value: &str) -> Option<&str> {
        let wanted = value.trim().to_lowercase();
        self.values
            .iter()
            .find(|v| v.to_lowercase() == wanted)
            .map(String::as_str)
    }

    pub fn accepts(&self, value: &str) -> bool {
        match self.kind {
            // raw surface strings are legal until delexicalization runs
            AttributeKind::Delexicalized => !value.trim().is_empty(),
            _ => self.values.iter().any(|v| v == value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let schema = Self { attributes };
        schema.validate()?;
        Ok(schema)
    }

    /// The default E2E-style schema with eight restaurant attributes.
    pub fn e2e() -> Self {
        Self::from_json_str(E2E_SCHEMA).expect("bundled schema is valid")
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let schema: AttributeSchema = serde_json::from_str(json)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for attr in &self.attributes {
            if attr.name.trim().is_empty() {
                return Err(Error::InvalidSchema("empty attribute name".into()));
            }
            if !seen.insert(attr.name.to_lowercase()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate attribute `{}`",
                    attr.name
                )));
            }
            if attr.values.is_empty() {
                return Err(Error::InvalidSchema(format!(
                    "attribute `{}` has no values",
                    attr.name
                )));
            }
            let distinct: HashSet<&String> = attr.values.iter().collect();
            if distinct.len() != attr.values.len() {
                return Err(Error::InvalidSchema(format!(
                    "attribute `{}` repeats a value",
                    attr.name
                )));
            }
            if attr.kind == AttributeKind::Delexicalized
                && (attr.values.len() != 1 || !crate::vocab::is_placeholder(&attr.values[0]))
            {
                return Err(Error::InvalidSchema(format!(
                    "delexicalized attribute `{}` must carry exactly one placeholder value",
                    attr.name
                )));
            }
            if attr.kind == AttributeKind::Boolean && attr.lexicon.as_ref().is_some_and(|l| l.is_empty()) {
                return Err(Error::InvalidSchema(format!(
                    "boolean attribute `{}` has an empty lexicon",
                    attr.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Case-insensitive attribute lookup, used when ingesting external data.
    pub fn resolve(&self, name: &str) -> Option<&Attribute> {
        let wanted = name.trim().to_lowercase();
        self.attributes.iter().find(|a| a.name.to_lowercase() == wanted)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    /// Attributes whose values are realized literally (not delexicalized).
    pub fn lexical_attributes(&self) -> Vec<String> {
        self.attributes
            .iter()
            .filter(|a| a.kind != AttributeKind::Delexicalized)
            .map(|a| a.name.clone())
            .collect()
    }

    /// Every token a linearized MR can contain.
    pub fn context_tokens(&self) -> Vec<String> {
        let mut out = Vec::new();
        for attr in &self.attributes {
            out.extend(normalize_tokens(&attr.name));
            for v in &attr.values {
                out.extend(normalize_tokens(v));
            }
        }
        out
    }
}

/// Partial assignment of attribute names to values.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeaningRepresentation {
    assignments: BTreeMap<String, String>,
}

impl MeaningRepresentation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, attr: impl Into<String>, value: impl Into<String>) -> Self {
        self.assignments.insert(attr.into(), value.into());
        self
    }

    pub fn set(&mut self, attr: impl Into<String>, value: impl Into<String>) -> Option<String> {
        self.assignments.insert(attr.into(), value.into())
    }

    pub fn remove(&mut self, attr: &str) -> Option<String> {
        self.assignments.remove(attr)
    }

    pub fn get(&self, attr: &str) -> Option<&str> {
        self.assignments.get(attr).map(String::as_str)
    }

    pub fn contains(&self, attr: &str) -> bool {
        self.assignments.contains_key(attr)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        for (attr, value) in self.iter() {
            let Some(decl) = schema.get(attr) else {
                return Err(Error::InvalidMr(format!("unknown attribute `{attr}`")));
            };
            if !decl.accepts(value) {
                return Err(Error::InvalidMr(format!(
                    "value `{value}` not allowed for `{attr}`"
                )));
            }
        }
        Ok(())
    }
}

impl FromIterator<(String, String)> for MeaningRepresentation {
    fn from_iter<T: IntoIterator<Item = (String, String)>>(iter: T) -> Self {
        Self {
            assignments: iter.into_iter().collect(),
        }
    }
}

/// Renders `mr` as `attr value-tokens ...` clauses in schema order, then SEP.
pub fn linearize_mr(
    mr: &MeaningRepresentation,
    schema: &AttributeSchema,
    vocab: &Vocabulary,
) -> Result<TokenSequence> {
    mr.validate(schema)?;
    let mut ids = Vec::new();
    for attr in &schema.attributes {
        let Some(value) = mr.get(&attr.name) else {
            continue;
        };
        for tok in normalize_tokens(&attr.name)
            .into_iter()
            .chain(normalize_tokens(value))
        {
            let id = vocab.id(&tok).ok_or_else(|| {
                Error::UnbuildableContext(format!(
                    "token `{tok}` of {}[{value}] is not in the vocabulary",
                    attr.name
                ))
            })?;
            ids.push(id);
        }
    }
    ids.push(TokenId::SEP);
    Ok(TokenSequence::new(ids))
}

/// A conditioning input: either a meaning representation or raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Input {
    Mr(MeaningRepresentation),
    Tokens(TokenSequence),
}

impl Input {
    /// Token context the speaker conditions on: the MR linearization, or the
    /// text ids followed by SEP.
    pub fn context(&self, schema: &AttributeSchema, vocab: &Vocabulary) -> Result<TokenSequence> {
        match self {
            Input::Mr(mr) => linearize_mr(mr, schema, vocab),
            Input::Tokens(seq) => {
                seq.validate(vocab.len())?;
                let mut ids = seq.body().to_vec();
                ids.push(TokenId::SEP);
                Ok(TokenSequence::new(ids))
            }
        }
    }

    pub fn as_mr(&self) -> Option<&MeaningRepresentation> {
        match self {
            Input::Mr(mr) => Some(mr),
            Input::Tokens(_) => None,
        }
    }

    fn same_kind(&self, other: &Input) -> bool {
        matches!(
            (self, other),
            (Input::Mr(_), Input::Mr(_)) | (Input::Tokens(_), Input::Tokens(_))
        )
    }
}

impl From<MeaningRepresentation> for Input {
    fn from(mr: MeaningRepresentation) -> Self {
        Input::Mr(mr)
    }
}

impl From<TokenSequence> for Input {
    fn from(seq: TokenSequence) -> Self {
        Input::Tokens(seq)
    }
}

/// An ordered, non-empty, kind-homogeneous list of input units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    units: Vec<Input>,
}

impl Document {
    pub fn new(units: Vec<Input>) -> Result<Self> {
        let Some(first) = units.first() else {
            return Err(Error::EmptyInput("a document needs at least one unit"));
        };
        if units.iter().any(|u| !u.same_kind(first)) {
            return Err(Error::InvalidParameter(
                "document units must all be MRs or all be token sequences".into(),
            ));
        }
        Ok(Self { units })
    }

    pub fn units(&self) -> &[Input] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema_vocab() -> (AttributeSchema, Vocabulary) {
        let schema = AttributeSchema::e2e();
        let vocab = Vocabulary::build(schema.context_tokens());
        (schema, vocab)
    }

    pub(crate) fn fig1_mr() -> MeaningRepresentation {
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
    fn default_schema_shape() {
        let schema = AttributeSchema::e2e();
        let names: Vec<&str> = schema.names().collect();
        assert_eq!(
            names,
            vec![
                "name",
                "eatType",
                "food",
                "priceRange",
                "customerRating",
                "area",
                "familyFriendly",
                "near"
            ]
        );
        assert_eq!(schema.get("name").unwrap().placeholder(), Some("NAME_PLH"));
        assert_eq!(schema.get("familyFriendly").unwrap().kind, AttributeKind::Boolean);
        assert_eq!(schema.lexical_attributes().len(), 6);
    }

    #[test]
    fn single_clause() {
        let (schema, vocab) = schema_vocab();
        let seq = linearize_mr(
            &MeaningRepresentation::new().with("area", "riverside"),
            &schema,
            &vocab,
        )
        .unwrap();
        assert_eq!(
            seq.ids,
            vec![
                vocab.id("area").unwrap(),
                vocab.id("riverside").unwrap(),
                TokenId::SEP
            ]
        );
    }

    #[test]
    fn empty_mr_is_just_sep() {
        let (schema, vocab) = schema_vocab();
        let seq = linearize_mr(&MeaningRepresentation::new(), &schema, &vocab).unwrap();
        assert_eq!(seq.ids, vec![TokenId::SEP]);
    }

    #[test]
    fn fig1_mr_has_seven_clauses_in_schema_order() {
        let (schema, vocab) = schema_vocab();
        let seq = linearize_mr(&fig1_mr(), &schema, &vocab).unwrap();
        let text: Vec<&str> = seq.ids.iter().map(|id| vocab.token(*id).unwrap()).collect();
        assert_eq!(
            text.join(" "),
            "name NAME_PLH eattype coffee shop food english pricerange cheap \
             customerrating 5 out of 5 area riverside familyfriendly yes <sep>"
        );
        let heads = [
            "name",
            "eattype",
            "food",
            "pricerange",
            "customerrating",
            "area",
            "familyfriendly",
        ];
        let found: Vec<&str> = text.iter().copied().filter(|t| heads.contains(t)).collect();
        assert_eq!(found, heads);
    }

    #[test]
    fn unknown_value_token_is_unbuildable() {
        let schema = AttributeSchema::e2e();
        let vocab = Vocabulary::build(["area"]);
        let err = linearize_mr(
            &MeaningRepresentation::new().with("area", "riverside"),
            &schema,
            &vocab,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnbuildableContext(_)));
    }

    #[test]
    fn invalid_mrs_are_rejected() {
        let schema = AttributeSchema::e2e();
        assert!(MeaningRepresentation::new()
            .with("colour", "red")
            .validate(&schema)
            .is_err());
        assert!(MeaningRepresentation::new()
            .with("area", "moon")
            .validate(&schema)
            .is_err());
        assert!(MeaningRepresentation::new()
            .with("name", "Fitzbillies")
            .validate(&schema)
            .is_ok());
    }

    #[test]
    fn schema_validation() {
        let bad = r#"{"attributes":[{"name":"a","kind":"categorical","values":[]}]}"#;
        assert!(AttributeSchema::from_json_str(bad).is_err());
        let dup = r#"{"attributes":[
            {"name":"a","kind":"categorical","values":["x"]},
            {"name":"A","kind":"categorical","values":["y"]}]}"#;
        assert!(AttributeSchema::from_json_str(dup).is_err());
        let delex = r#"{"attributes":[{"name":"n","kind":"delexicalized","values":["Bob"]}]}"#;
        assert!(AttributeSchema::from_json_str(delex).is_err());
        let extra = r#"{"attributes":[],"other":1}"#;
        assert!(AttributeSchema::from_json_str(extra).is_err());
    }

    #[test]
    fn text_input_context_appends_sep() {
        let (schema, vocab) = schema_vocab();
        let seq = TokenSequence::new(vec![vocab.id("cheap").unwrap(), TokenId::EOS]);
        let ctx = Input::Tokens(seq).context(&schema, &vocab).unwrap();
        assert_eq!(ctx.ids, vec![vocab.id("cheap").unwrap(), TokenId::SEP]);
    }

    #[test]
    fn documents_are_homogeneous_and_non_empty() {
        assert!(Document::new(vec![]).is_err());
        let mixed = vec![
            Input::Mr(MeaningRepresentation::new()),
            Input::Tokens(TokenSequence::default()),
        ];
        assert!(Document::new(mixed).is_err());
        assert_eq!(Document::new(vec![Input::Mr(fig1_mr())]).unwrap().len(), 1);
    }

    fn arb_mr() -> impl Strategy<Value = MeaningRepresentation> {
        let schema = AttributeSchema::e2e();
        let per_attr: Vec<_> = schema
            .attributes
            .iter()
            .map(|a| proptest::option::of(proptest::sample::select(a.values.clone())))
            .collect();
        per_attr.prop_map(move |vals| {
            schema
                .attributes
                .iter()
                .zip(vals)
                .filter_map(|(a, v)| v.map(|v| (a.name.clone(), v)))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn linearization_is_injective(a in arb_mr(), b in arb_mr()) {
            let (schema, vocab) = schema_vocab();
            let la = linearize_mr(&a, &schema, &vocab).unwrap();
            let lb = linearize_mr(&b, &schema, &vocab).unwrap();
            prop_assert_eq!(a == b, la == lb);
        }
    }
}
