use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate planting: N·rho_N = {ones} with N = {n}")]
    DegeneratePlanting { n: usize, ones: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index out of range or wrong bit value: i = {i}, j = {j}")]
    InvalidSwap { i: usize, j: usize },

    #[error("enumeration budget exceeded: |Sigma| = {states} > budget {budget}")]
    BudgetExceeded { states: u128, budget: u128 },

    #[error("conditioned interval ({lo}, {hi}) contains no reachable overlap")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("solver did not converge: {0}")]
    NonConverged(String),

    #[error("spatial truncation leak {leak:.3e} above tolerance after {retries} retries")]
    TruncationLeak { leak: f64, retries: u32 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("payload decode error: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, Error>;
