use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: no triples found")]
    EmptyDataset { path: PathBuf },

    #[error("{path}:{line}: malformed triple: {reason}")]
    MalformedTriple {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("hop bound K={0} is outside 1..=3")]
    HopBoundExceeded(u32),

    #[error("corrupt dictionary file: {0}")]
    CorruptDictFile(String),

    #[error("corrupt checkpoint file: {0}")]
    CorruptCheckpoint(String),

    #[error("positive dictionary was mined with K={dict} but the configuration asks for K={config}")]
    KMismatch { dict: u32, config: u32 },

    #[error("vector norm {norm:e} is at or below the degeneracy threshold")]
    DegenerateVector { norm: f64 },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("entity id {id} is outside the embedding table ({count} entities)")]
    UnknownEntity { id: u32, count: usize },

    #[error("unknown label '{label}'")]
    UnknownLabel { label: String },

    #[error("line {line}: unknown configuration key '{key}'")]
    UnknownKey { line: usize, key: String },

    #[error("{}bad value '{value}' for '{key}': {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    BadValue {
        line: Option<usize>,
        key: String,
        value: String,
        reason: String,
    },

    #[error("probe needs at least two distinct classes")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("t-test needs at least 2 values per sample, got {0}")]
    InsufficientSamples(usize),

    #[error("{0}")]
    InvalidInput(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error beneath any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
