use std::io;

use thiserror::Error;

/// Errors produced by the filtering engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("plane is empty")]
    EmptyPlane,
    #[error("plane data length {len} does not match {width}x{height}")]
    PlaneSize { width: usize, height: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid pattern: {0}")]
    Pattern(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("invalid oracle: {0}")]
    Oracle(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
