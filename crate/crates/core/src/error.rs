use thiserror::Error;

use crate::singular::ContinuationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gradient of H is undefined at the origin")]
    SingularPoint,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid norm specification: {0}")]
    InvalidNorm(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} values but the grid has {expected} vertices")]
    MismatchedGrid { expected: usize, got: usize },
    #[error("zero field")]
    ZeroField,
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("continuation aborted at epsilon = {epsilon:e}: {reason}")]
    ContinuationAborted {
        epsilon: f64,
        reason: String,
        partial: Box<ContinuationReport>,
    },
    #[error("degenerate barrier data: {0}")]
    DegenerateBarrier(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
