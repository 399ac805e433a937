//! Token alphabet shared by inputs and outputs.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const BOS: TokenId = TokenId(0);
    pub const EOS: TokenId = TokenId(1);
    pub const SEP: TokenId = TokenId(2);
    pub const UNK: TokenId = TokenId(3);
    pub const NAME_PLH: TokenId = TokenId(4);
    pub const NEAR_PLH: TokenId = TokenId(5);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
pub const SEP: &str = "<sep>";
pub const UNK: &str = "<unk>";
pub const NAME_PLH: &str = "NAME_PLH";
pub const NEAR_PLH: &str = "NEAR_PLH";

/// Reserved tokens, in id order.
pub const RESERVED: [&str; 6] = [BOS, EOS, SEP, UNK, NAME_PLH, NEAR_PLH];

const PUNCTUATION: [char; 4] = ['.', '!', '?', ','];

pub fn is_placeholder(token: &str) -> bool {
    token == NAME_PLH || token == NEAR_PLH
}

/// Lowercases, splits `. ! ? ,` into standalone tokens and splits on
/// whitespace. Placeholder tokens keep their case.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        if PUNCTUATION.contains(&c) {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    spaced
        .split_whitespace()
        .map(|t| {
            if is_placeholder(t) {
                t.to_string()
            } else {
                t.to_lowercase()
            }
        })
        .collect()
}

/// Canonical text form: normalized tokens joined by single spaces.
pub fn normalize(text: &str) -> String {
    normalize_tokens(text).join(" ")
}

/// Bijection between token strings and ids. Ids 0-5 are reserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_list(RESERVED.iter().map(|s| s.to_string()).collect())
            .expect("reserved tokens form a valid vocabulary")
    }
}

impl Vocabulary {
    /// Reserved tokens followed by the distinct given tokens in sorted order.
    pub fn build<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let extra: BTreeSet<String> = tokens
            .into_iter()
            .map(|s| s.as_ref().to_string())
            .filter(|s| !s.is_empty() && !RESERVED.contains(&s.as_str()))
            .collect();
        let mut list: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        list.extend(extra);
        Self::from_list(list).expect("deduplicated token list")
    }

    /// Rebuilds a vocabulary from its serialized id-ordered token list.
    pub fn from_list(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < RESERVED.len() || tokens.iter().zip(RESERVED).any(|(a, b)| a != b) {
            return Err(Error::Model(
                "vocabulary must start with the reserved tokens".into(),
            ));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                return Err(Error::Model("empty token string in vocabulary".into()));
            }
            if index.insert(tok.clone(), TokenId(i as u32)).is_some() {
                return Err(Error::Model(format!("duplicate token `{tok}`")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(TokenId::UNK)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn ids(&self) -> impl Iterator<Item = TokenId> {
        (0..self.tokens.len() as u32).map(TokenId)
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.tokens.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let tokens = Vec::<String>::deserialize(deserializer)?;
        Vocabulary::from_list(tokens).map_err(serde::de::Error::custom)
    }
}

/// An output (or context) as token ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence {
    pub ids: Vec<TokenId>,
}

impl TokenSequence {
    pub fn new(ids: Vec<TokenId>) -> Self {
        Self { ids }
    }

    pub fn is_terminated(&self) -> bool {
        self.ids.last() == Some(&TokenId::EOS)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ids without a trailing EOS.
    pub fn body(&self) -> &[TokenId] {
        match self.ids.split_last() {
            Some((&TokenId::EOS, rest)) => rest,
            _ => &self.ids,
        }
    }

    pub fn terminated(mut self) -> Self {
        if !self.is_terminated() {
            self.ids.push(TokenId::EOS);
        }
        self
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        for (pos, id) in self.ids.iter().enumerate() {
            if id.index() >= vocab_size {
                return Err(Error::TokenOutOfRange {
                    id: id.0,
                    size: vocab_size,
                });
            }
            if *id == TokenId::EOS && pos + 1 != self.ids.len() {
                return Err(Error::MalformedSequence(format!(
                    "EOS at position {pos} of {}",
                    self.ids.len()
                )));
            }
        }
        Ok(())
    }
}

impl From<Vec<TokenId>> for TokenSequence {
    fn from(ids: Vec<TokenId>) -> Self {
        Self { ids }
    }
}

/// Maps text to ids; unknown words become UNK. No BOS/EOS is inserted.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> TokenSequence {
    TokenSequence::new(
        normalize_tokens(text)
            .iter()
            .map(|t| vocab.id_or_unk(t))
            .collect(),
    )
}

/// Space-joins token strings, dropping BOS/EOS/SEP. Out-of-range ids render
/// as UNK.
pub fn detokenize(seq: &TokenSequence, vocab: &Vocabulary) -> String {
    seq.ids
        .iter()
        .filter(|id| !matches!(**id, TokenId::BOS | TokenId::EOS | TokenId::SEP))
        .map(|id| vocab.token(*id).unwrap_or(UNK))
        .collect::<Vec<_>>()
        .join(" ")
}
