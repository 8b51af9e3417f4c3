use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the selection pipeline and its data loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("K = {k} is invalid for {candidates} candidates")]
    InvalidK { k: usize, candidates: usize },

    #[error("infeasible weights: {0}")]
    InfeasibleWeights(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integer scale lcm({k}, {n}) exceeds the exact flow budget")]
    ScaleOverflow { k: usize, n: usize },

    #[error("marginals do not balance: {0} vs {1}")]
    Unbalanced(f64, f64),

    #[error("missing data file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("parse error in {file} line {line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    #[error("data check failed: {0}")]
    DataCheck(String),

    #[error("unknown user {0}")]
    UnknownUser(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
