use std::path::PathBuf;

use thiserror::Error;

use crate::vocab::TokenId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("token id out of range: {id} (vocabulary size {size})")]
    TokenOutOfRange { id: TokenId, size: usize },

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("invalid language code {0:?}")]
    InvalidLanguage(String),

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("context overflow: prefix of {len} tokens, limit {max}")]
    ContextOverflow { len: usize, max: usize },

    #[error("vocabulary size mismatch: expected {expected}, got {actual}")]
    VocabMismatch { expected: usize, actual: usize },

    #[error("batch item {index}: {source}")]
    BatchItem {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("search space of {size} sequences exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: f64, limit: f64 },

    #[error("insufficient contrast pool: {segments} segments cannot supply {k} contrastive sources each")]
    InsufficientPool { segments: usize, k: usize },

    #[error("degenerate direction: source and target are both {0:?}")]
    DegenerateDirection(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("line count mismatch: {}", describe_counts(.0))]
    LineCountMismatch(Vec<(PathBuf, usize)>),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("server error ({code}): {message}")]
    Server { code: String, message: String },

    #[error("malformed message on line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("timed out waiting for {0}")]
    Timeout(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn describe_counts(files: &[(PathBuf, usize)]) -> String {
    files
        .iter()
        .map(|(path, n)| format!("{} has {n} lines", path.display()))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// Process exit code: 2 config, 3 scorer/protocol, 4 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::InvalidLanguage(_)
            | Error::DegenerateDirection(_)
            | Error::Json(_) => 2,
            Error::Protocol(_)
            | Error::Server { .. }
            | Error::MalformedLine { .. }
            | Error::Timeout(_)
            | Error::ContextOverflow { .. }
            | Error::VocabMismatch { .. }
            | Error::InvalidDistribution(_)
            | Error::BatchItem { .. } => 3,
            _ => 4,
        }
    }
}
