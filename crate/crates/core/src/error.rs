use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (dimension chains, ranges, infeasible specs).
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid call-time input (shape mismatch, bad labels, empty sets).
    #[error("input error: {0}")]
    Input(String),

    /// Not enough pool examples in a category to satisfy a selection.
    #[error("insufficient pool for category {category}: requested {requested}, available {available}")]
    InsufficientPool {
        category: usize,
        requested: usize,
        available: usize,
    },

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    /// Malformed binary or text artifact.
    #[error("format error: {0}")]
    Format(String),

    #[error("{0}")]
    Runtime(String),
    #[error("config not found: {}", .0.display())]
    ConfigNotFound(PathBuf),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the failure is attributable to the caller's input or config
    /// (as opposed to a runtime failure).
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Input(_)
                | Error::InsufficientPool { .. }
                | Error::ConfigNotFound(_)
                | Error::Json(_)
        )
    }
}
