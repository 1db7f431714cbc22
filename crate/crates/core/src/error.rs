use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("trace too short: need more than {needed} slots, have {actual}")]
    TraceTooShort { needed: usize, actual: usize },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("malformed model message: {0}")]
    MalformedMessage(String),

    #[error("malformed trace file: {0}")]
    MalformedTrace(String),

    #[error("unknown node {0}")]
    UnknownNode(u32),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("node {node}: {source}")]
    Node {
        node: u32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("scenario file: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
