use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{delexicalize, CorpusRecord};
use crate::error::{Error, Result};
use crate::mr::{AttributeKind, AttributeSchema, MeaningRepresentation};

/// A template grammar producing E2E-style (MR, reference) pairs.
///
/// Sampling uses ChaCha8 seeded from a `u64`, so a corpus is a pure
/// function of (grammar, n, seed). In a grammar file every field is
/// optional and falls back to the default grammar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticGrammar {
    pub schema: AttributeSchema,
    /// Clause templates per attribute; `{v}` marks the value.
    pub templates: BTreeMap<String, Vec<String>>,
    /// Templates for boolean attributes, keyed by attribute then value.
    pub boolean_templates: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    pub connectors: Vec<String>,
    /// Surface values for delexicalized attributes.
    pub proper_nouns: BTreeMap<String, Vec<String>>,
    /// Presence probability of each attribute other than `name`.
    pub presence: f64,
    /// Probability of dropping each non-name clause from the reference.
    pub omission: f64,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for SyntheticGrammar {
    fn default() -> Self {
        let templates = [
            (
                "name",
                &["{v} is a place to eat", "there is a place called {v}"][..],
            ),
            ("eatType", &["it is a {v}", "it is a kind of {v}"]),
            ("food", &["it serves {v} food", "they offer {v} cuisine"]),
            ("priceRange", &["prices are {v}", "it has a price range of {v}"]),
            (
                "customerRating",
                &["it has a customer rating of {v}", "customers rate it {v}"],
            ),
            ("area", &["it is in the {v} area", "it is located in {v}"]),
            ("near", &["it is near {v}", "you can find it close to {v}"]),
        ]
        .into_iter()
        .map(|(a, t)| (a.to_string(), strings(t)))
        .collect();
        let boolean_templates = BTreeMap::from([(
            "familyFriendly".to_string(),
            BTreeMap::from([
                (
                    "yes".to_string(),
                    strings(&["it is family friendly", "it is kid friendly"]),
                ),
                (
                    "no".to_string(),
                    strings(&["it is not family friendly", "it is not child friendly"]),
                ),
            ]),
        )]);
        let proper_nouns = BTreeMap::from([
            (
                "name".to_string(),
                strings(&[
                    "Fitzbillies",
                    "The Eagle",
                    "Blue Spice",
                    "The Punter",
                    "Zizzi",
                    "Aromi",
                    "The Wrestlers",
                    "Cotto",
                    "Loch Fyne",
                    "Giraffe",
                ]),
            ),
            (
                "near".to_string(),
                strings(&[
                    "Burger King",
                    "The Bakers",
                    "Cafe Sicilia",
                    "Raja Indian Cuisine",
                    "All Bar One",
                    "Crowne Plaza Hotel",
                ]),
            ),
        ]);
        Self {
            schema: AttributeSchema::e2e(),
            templates,
            boolean_templates,
            connectors: strings(&[" , ", " and ", " . "]),
            proper_nouns,
            presence: 0.8,
            omission: 0.1,
        }
    }
}

impl SyntheticGrammar {
    pub fn with_omission(mut self, omission: f64) -> Self {
        self.omission = omission;
        self
    }

    pub fn with_presence(mut self, presence: f64) -> Self {
        self.presence = presence;
        self
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let grammar: Self = serde_json::from_str(json)?;
        grammar.validate()?;
        Ok(grammar)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, p) in [("presence", self.presence), ("omission", self.omission)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{label} probability {p} outside [0, 1]"
                )));
            }
        }
        if self.schema.get("name").is_none() {
            return Err(Error::InvalidSchema(
                "synthetic grammar needs a `name` attribute".into(),
            ));
        }
        if self.connectors.is_empty() {
            return Err(Error::InvalidParameter(
                "grammar needs at least one connector".into(),
            ));
        }
        let missing = |attr: &str| Error::InvalidParameter(format!("no templates for `{attr}`"));
        for attr in &self.schema.attributes {
            if attr.kind == AttributeKind::Boolean {
                let per_value = self.boolean_templates.get(&attr.name);
                for v in &attr.values {
                    if per_value.and_then(|m| m.get(v)).is_none_or(|t| t.is_empty()) {
                        return Err(missing(&attr.name));
                    }
                }
                continue;
            }
            let templates = match self.templates.get(&attr.name) {
                Some(t) if !t.is_empty() => t,
                _ => return Err(missing(&attr.name)),
            };
            if templates.iter().any(|t| !t.contains("{v}")) {
                return Err(Error::InvalidParameter(format!(
                    "a template for `{}` does not realize its value",
                    attr.name
                )));
            }
            if attr.kind == AttributeKind::Delexicalized
                && self.proper_nouns.get(&attr.name).is_none_or(|n| n.is_empty())
            {
                return Err(Error::InvalidParameter(format!(
                    "no surface values for `{}`",
                    attr.name
                )));
            }
        }
        Ok(())
    }

    fn sample_mr(&self, rng: &mut ChaCha8Rng) -> MeaningRepresentation {
        let mut mr = MeaningRepresentation::new();
        for attr in &self.schema.attributes {
            if attr.name != "name" && !rng.gen_bool(self.presence) {
                continue;
            }
            let pool = match attr.kind {
                AttributeKind::Delexicalized => &self.proper_nouns[&attr.name],
                _ => &attr.values,
            };
            mr.set(
                attr.name.clone(),
                pool.choose(rng).expect("validated non-empty").clone(),
            );
        }
        mr
    }

    fn clause(&self, attr: &str, value: &str, rng: &mut ChaCha8Rng) -> String {
        let kind = self.schema.get(attr).map(|a| a.kind);
        let templates = match kind {
            Some(AttributeKind::Boolean) => &self.boolean_templates[attr][value],
            _ => &self.templates[attr],
        };
        templates
            .choose(rng)
            .expect("validated non-empty")
            .replace("{v}", value)
    }

    fn realize(&self, mr: &MeaningRepresentation, rng: &mut ChaCha8Rng) -> String {
        let name = mr.get("name").expect("name is always sampled");
        let mut text = self.clause("name", name, rng);
        let mut rest: Vec<(&str, &str)> = mr.iter().filter(|(a, _)| *a != "name").collect();
        rest.shuffle(rng);
        for (attr, value) in rest {
            let dropped = rng.gen_bool(self.omission);
            let clause = self.clause(attr, value, rng);
            let connector = self.connectors.choose(rng).expect("validated non-empty");
            if !dropped {
                text.push_str(connector);
                text.push_str(&clause);
            }
        }
        text.push_str(" .");
        text
    }
}

/// `n` delexicalized records with ids `synth-<k>`.
pub fn generate_corpus(grammar: &SyntheticGrammar, n: usize, seed: u64) -> Result<Vec<CorpusRecord>> {
    if n == 0 {
        return Err(Error::InvalidParameter("corpus size must be at least 1".into()));
    }
    grammar.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n.to_string().len();
    Ok((0..n)
        .map(|k| {
            let mr = grammar.sample_mr(&mut rng);
            let reference = grammar.realize(&mr, &mut rng);
            let raw = CorpusRecord {
                id: format!("synth-{k:0width$}"),
                mr,
                reference,
                delex: BTreeMap::new(),
            };
            delexicalize(&raw, &grammar.schema)
        })
        .collect())
}
