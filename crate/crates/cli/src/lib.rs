//! Command-line surface for smeared topological optimization: synthetic
//! images, task presets, run configuration and the subcommands.

pub mod commands;
pub mod config;
pub mod gen;
pub mod preset;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] topo_smear::Error),
    #[error("cannot read config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Value { key: &'static str, message: String },
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error("generator: {0}")]
    Generator(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;
