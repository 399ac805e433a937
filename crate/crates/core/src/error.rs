use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate distribution: every log-weight is -inf")]
    DegenerateDistribution,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unbuildable context: {0}")]
    UnbuildableContext(String),

    #[error("invalid meaning representation: {0}")]
    InvalidMr(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("token id {id} out of range for vocabulary of size {size}")]
    TokenOutOfRange { id: u32, size: usize },

    #[error("malformed token sequence: {0}")]
    MalformedSequence(String),

    #[error("output sequence is not EOS-terminated")]
    Unterminated,

    #[error("belief collapse: every input assigns zero probability to the token")]
    BeliefCollapse,

    #[error("nothing to mask: attribute `{0}` is not assigned")]
    NothingToMask(String),

    #[error("index {index} out of range for {len} units")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("missing collaborator: {0}")]
    MissingCollaborator(&'static str),

    #[error("vocabulary mismatch between {0}")]
    VocabularyMismatch(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{path}: row {row}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: line {line}: {message}")]
    Jsonl {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid model file: {0}")]
    Model(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
