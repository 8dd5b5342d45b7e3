use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the topological optimization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("png decode error on {path}: {message}")]
    Png { path: PathBuf, message: String },
    #[error("unsupported png format: {0}")]
    UnsupportedPng(String),
    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("field has duplicate values; run make_generic first")]
    DuplicateValues,
    #[error("malformed filtration: {0}")]
    MalformedFiltration(String),
    #[error("index out of range: {index} >= {len}")]
    IndexOutOfRange { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
