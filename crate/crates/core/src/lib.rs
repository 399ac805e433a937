//! Pragmatically informative decoding for conditional text generation.
//!
//! A base speaker `S0(o | i)` is turned into a pragmatic speaker in two ways:
//! reranking beam candidates with a reconstructor listener `L(i | o)`, or
//! decoding token by token against distractor inputs while tracking a belief
//! over which input the prefix describes.

pub mod data;
pub mod distractor;
pub mod error;
pub mod eval;
pub mod listener;
pub mod logspace;
pub mod mr;
pub mod pipeline;
pub mod pragmatics;
pub mod speaker;
pub mod vocab;

pub use error::{Error, Result};
pub use mr::{linearize_mr, AttributeKind, AttributeSchema, Document, Input, MeaningRepresentation};
pub use vocab::{detokenize, tokenize, TokenId, TokenSequence, Vocabulary};
