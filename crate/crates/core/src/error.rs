//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An environment was driven outside its episode protocol.
    #[error("protocol violation: {0}")]
    Protocol(String),

    /// Data too degenerate for the requested statistic.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// A required artifact is missing on disk.
    #[error("not found: {0}")]
    NotFound(PathBuf),

    /// A data file did not match its documented layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
