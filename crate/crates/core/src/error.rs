use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("beta must lie in [-1, 1], got {0}")]
    InvalidBeta(f64),

    #[error("invalid decoding order: {0}")]
    InvalidOrder(String),

    #[error("user index {index} out of range for {n_users} users")]
    UserIndex { index: usize, n_users: usize },

    #[error("order id {id} out of range for {n_users} users (total {total})")]
    OrderIdRange {
        id: u128,
        n_users: usize,
        total: u128,
    },

    #[error(
        "exhaustive enumeration is capped at {cap} users (requested {n_users}); pass --allow-large-n to override"
    )]
    EnumerationCap { n_users: usize, cap: usize },

    #[error("size mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the environment rather than of the input.
    pub fn is_runtime(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Json(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
