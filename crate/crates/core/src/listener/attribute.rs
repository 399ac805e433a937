//! Per-attribute multinomial naive Bayes over the output's bag of words.
//!
//! Every schema attribute gets its own classifier whose classes are the
//! attribute's values plus [`ABSENT`]; delexicalized attributes therefore
//! reduce to present/absent. The listener score for an MR is the sum of the
//! per-attribute log posteriors of the MR's class for each attribute, so
//! exponentiated scores sum to one over all complete attribute vectors.
//!
//! Tokens never seen in training are ignored. A class with no training
//! documents scores tokens with the attribute's pooled distribution, so it
//! differs from the others only through its prior.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ListenerModel;
use crate::error::{Error, Result};
use crate::logspace::log_softmax;
use crate::mr::{AttributeKind, AttributeSchema, Input, MeaningRepresentation};
use crate::vocab::{TokenId, TokenSequence, Vocabulary};

pub const ABSENT: &str = "ABSENT";

#[derive(Debug, Clone, PartialEq)]
struct ClassTable {
    classes: Vec<String>,
    docs: Vec<u64>,
    tokens: Vec<HashMap<TokenId, u64>>,
    totals: Vec<u64>,
}

impl ClassTable {
    fn empty(classes: Vec<String>) -> Self {
        let n = classes.len();
        Self {
            classes,
            docs: vec![0; n],
            tokens: vec![HashMap::new(); n],
            totals: vec![0; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeClassifierListener {
    k: f64,
    schema: AttributeSchema,
    vocab: Vocabulary,
    tables: Vec<ClassTable>,
    pooled: HashMap<TokenId, u64>,
    pooled_total: u64,
}

fn class_labels(schema: &AttributeSchema) -> Vec<Vec<String>> {
    schema
        .attributes
        .iter()
        .map(|a| {
            let mut c = a.values.clone();
            c.push(ABSENT.to_string());
            c
        })
        .collect()
}

fn bag(output: &[TokenId]) -> impl Iterator<Item = TokenId> + '_ {
    output
        .iter()
        .copied()
        .filter(|t| !matches!(*t, TokenId::BOS | TokenId::EOS | TokenId::SEP))
}

pub fn train_attribute_listener(
    corpus: &[(MeaningRepresentation, TokenSequence)],
    schema: &AttributeSchema,
    vocab: &Vocabulary,
    k: f64,
) -> Result<AttributeClassifierListener> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("listener training corpus is empty"));
    }
    let mut listener = AttributeClassifierListener::untrained(schema, vocab, k)?;
    for (mr, text) in corpus {
        text.validate(vocab.len())?;
        let classes = listener.classes_of(mr)?;
        for (table, class) in listener.tables.iter_mut().zip(classes) {
            table.docs[class] += 1;
            for t in bag(&text.ids) {
                *table.tokens[class].entry(t).or_insert(0) += 1;
                table.totals[class] += 1;
            }
        }
        for t in bag(&text.ids) {
            *listener.pooled.entry(t).or_insert(0) += 1;
            listener.pooled_total += 1;
        }
    }
    Ok(listener)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeFile {
    #[serde(rename = "type")]
    kind: String,
    k: f64,
    schema: AttributeSchema,
    vocab: Vocabulary,
    priors: BTreeMap<String, BTreeMap<String, u64>>,
    token_counts: BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>>,
}

impl AttributeClassifierListener {
    /// A listener with no training data: uniform posteriors everywhere.
    pub fn untrained(schema: &AttributeSchema, vocab: &Vocabulary, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "listener smoothing must be positive, got {k}"
            )));
        }
        Ok(Self {
            k,
            schema: schema.clone(),
            vocab: vocab.clone(),
            tables: class_labels(schema).into_iter().map(ClassTable::empty).collect(),
            pooled: HashMap::new(),
            pooled_total: 0,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    /// Class index of `mr` for every schema attribute.
    fn classes_of(&self, mr: &MeaningRepresentation) -> Result<Vec<usize>> {
        mr.validate(&self.schema)?;
        Ok(self
            .schema
            .attributes
            .iter()
            .zip(&self.tables)
            .map(|(attr, table)| match mr.get(&attr.name) {
                None => table.classes.len() - 1,
                Some(_) if attr.kind == AttributeKind::Delexicalized => 0,
                Some(v) => attr.values.iter().position(|x| x == v).expect("validated value"),
            })
            .collect())
    }

    fn posterior(&self, table: &ClassTable, output: &[TokenId]) -> Vec<f64> {
        let v = self.vocab.len() as f64;
        let n_docs: u64 = table.docs.iter().sum();
        let n_classes = table.classes.len() as f64;
        let counted: Vec<TokenId> = bag(output).filter(|t| self.pooled.contains_key(t)).collect();
        let scores: Vec<f64> = (0..table.classes.len())
            .map(|c| {
                let mut s = ((table.docs[c] as f64 + self.k) / (n_docs as f64 + self.k * n_classes)).ln();
                let (counts, total) = if table.docs[c] > 0 {
                    (&table.tokens[c], table.totals[c])
                } else {
                    (&self.pooled, self.pooled_total)
                };
                let denom = total as f64 + self.k * v;
                for t in &counted {
                    let c = counts.get(t).copied().unwrap_or(0) as f64;
                    s += ((c + self.k) / denom).ln();
                }
                s
            })
            .collect();
        log_softmax(&scores).expect("finite class scores")
    }

    /// Per-attribute posterior probability vectors, classes ordered as the
    /// attribute's values followed by ABSENT.
    pub fn attribute_posteriors(&self, output: &[TokenId]) -> Vec<(String, Vec<(String, f64)>)> {
        self.schema
            .attributes
            .iter()
            .zip(&self.tables)
            .map(|(attr, table)| {
                let post = self.posterior(table, output);
                let named = table
                    .classes
                    .iter()
                    .cloned()
                    .zip(post.into_iter().map(f64::exp))
                    .collect();
                (attr.name.clone(), named)
            })
            .collect()
    }

    /// Per-attribute log posteriors of `mr`'s classes, in schema order.
    pub fn attribute_logprobs(&self, mr: &MeaningRepresentation, output: &[TokenId]) -> Result<Vec<f64>> {
        let classes = self.classes_of(mr)?;
        Ok(self
            .tables
            .iter()
            .zip(classes)
            .map(|(table, c)| self.posterior(table, output)[c])
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut priors = BTreeMap::new();
        let mut token_counts = BTreeMap::new();
        for (attr, table) in self.schema.attributes.iter().zip(&self.tables) {
            priors.insert(
                attr.name.clone(),
                table
                    .classes
                    .iter()
                    .cloned()
                    .zip(table.docs.iter().copied())
                    .collect::<BTreeMap<_, _>>(),
            );
            let per_class: BTreeMap<String, BTreeMap<String, u64>> = table
                .classes
                .iter()
                .zip(&table.tokens)
                .map(|(class, counts)| {
                    (
                        class.clone(),
                        counts.iter().map(|(t, c)| (t.to_string(), *c)).collect(),
                    )
                })
                .collect();
            token_counts.insert(attr.name.clone(), per_class);
        }
        let file = AttributeFile {
            kind: "attribute-nb".into(),
            k: self.k,
            schema: self.schema.clone(),
            vocab: self.vocab.clone(),
            priors,
            token_counts,
        };
        Ok(serde_json::to_string(&serde_json::to_value(&file)?)?)
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        let file: AttributeFile = serde_json::from_value(value)?;
        if file.kind != "attribute-nb" {
            return Err(Error::Model(format!(
                "expected an attribute-nb listener, got `{}`",
                file.kind
            )));
        }
        let schema = AttributeSchema::new(file.schema.attributes)?;
        let mut listener = Self::untrained(&schema, &file.vocab, file.k)?;
        let size = listener.vocab.len();
        for (attr, table) in schema.attributes.iter().zip(listener.tables.iter_mut()) {
            let priors = file.priors.get(&attr.name);
            let counts = file.token_counts.get(&attr.name);
            for (c, class) in table.classes.iter().enumerate() {
                table.docs[c] = priors.and_then(|p| p.get(class)).copied().unwrap_or(0);
                let Some(row) = counts.and_then(|m| m.get(class)) else {
                    continue;
                };
                for (tok, n) in row {
                    let id: u32 = tok
                        .parse()
                        .map_err(|_| Error::Model(format!("bad token id `{tok}`")))?;
                    if id as usize >= size {
                        return Err(Error::TokenOutOfRange { id, size });
                    }
                    table.tokens[c].insert(TokenId(id), *n);
                    table.totals[c] += n;
                }
            }
        }
        // every training document contributes its bag once to each
        // attribute's tables, so the first attribute's union is the pool
        if let Some(first) = listener.tables.first() {
            let mut pooled = HashMap::new();
            for counts in &first.tokens {
                for (t, n) in counts {
                    *pooled.entry(*t).or_insert(0) += n;
                }
            }
            listener.pooled_total = pooled.values().sum();
            listener.pooled = pooled;
        }
        Ok(listener)
    }

    pub fn seen_tokens(&self) -> HashSet<TokenId> {
        self.pooled.keys().copied().collect()
    }
}

impl ListenerModel for AttributeClassifierListener {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn reconstruction_logprob(&self, input: &Input, output: &[TokenId]) -> Result<f64> {
        let Some(mr) = input.as_mr() else {
            return Err(Error::InvalidMr(
                "the attribute listener only scores meaning representations".into(),
            ));
        };
        Ok(self.attribute_logprobs(mr, output)?.iter().sum())
    }
}
