use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("problem directory {0} does not exist")]
    MissingDirectory(PathBuf),

    #[error("fewer than 2 documents in {0}")]
    TooFewDocuments(PathBuf),

    #[error("truth references unknown document {0}")]
    UnknownDocument(String),

    #[error("truth omits document {0}")]
    TruthOmitsDocument(String),

    #[error("truth lists document {0} more than once")]
    DuplicateTruthEntry(String),

    #[error("document {0} has no tokens left after hapax removal")]
    EmptyDocument(String),

    #[error("document {0} has an all-zero topic row")]
    ZeroRow(String),

    #[error("row {0} is not unit-norm")]
    Unnormalized(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("clustering needs at least 2 clusters")]
    SingleCluster,

    #[error("no feasible k in [{lo}, {hi}] for the given constraints")]
    NoFeasibleK { lo: usize, hi: usize },

    #[error("problem {problem}: {source}")]
    Problem {
        problem: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_problem(self, problem: &str) -> Self {
        Error::Problem {
            problem: problem.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
