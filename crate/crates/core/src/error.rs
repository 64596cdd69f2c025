//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while parsing or validating networks and evidence files.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("network has no variables")]
    Empty,
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{0}` has no states")]
    NoStates(String),
    #[error("duplicate state label `{state}` on variable `{variable}`")]
    DuplicateState { variable: String, state: String },
    #[error("unknown variable `{0}` referenced")]
    UnknownVariable(String),
    #[error("unknown state `{state}` for variable `{variable}`")]
    UnknownState { variable: String, state: String },
    #[error("variable `{0}` has {1} CPTs; exactly one required")]
    CptCount(String, usize),
    #[error("variable `{0}` listed twice as a parent of `{1}`")]
    DuplicateParent(String, String),
    #[error("variable `{0}` is its own parent")]
    SelfParent(String),
    #[error("CPT for `{child}` has {got} rows; expected {expected} (one per parent configuration)")]
    RowCount { child: String, expected: usize, got: usize },
    #[error("CPT for `{child}`, row {row}: has {got} entries; expected {expected} (one per child state)")]
    RowWidth { child: String, row: usize, expected: usize, got: usize },
    #[error("CPT for `{child}`, row {row}: entry {value} outside [0, 1]")]
    BadEntry { child: String, row: usize, value: f64 },
    #[error("CPT for `{child}`, row {row}: sums to {sum}, more than 1e-9 away from 1; refusing to renormalize silently")]
    RowSum { child: String, row: usize, sum: f64 },
    #[error("parent arcs form a directed cycle (involving `{0}`)")]
    Cycle(String),
}

/// Errors raised by exact inference and the enumeration oracle.
#[derive(Debug, Error)]
pub enum InferenceError {
    /// The observed evidence (or a conditioning assignment) has probability
    /// zero under the model, so posteriors are undefined.
    #[error("evidence has probability zero under the model")]
    ZeroEvidence,
    /// A table or enumeration would exceed the configured size cap.
    #[error("{what} needs {needed} entries, over the cap of {cap}")]
    CapExceeded { what: &'static str, needed: u128, cap: u64 },
}

/// Errors raised by the samplers.
#[derive(Debug, Error)]
pub enum SampleError {
    #[error(transparent)]
    Inference(#[from] InferenceError),
    /// Chain initialization kept drawing zero-probability states.
    #[error("chain initialization failed after {0} attempts (all drawn states had probability zero)")]
    InitFailed(usize),
    /// Every importance weight in a run was zero; estimates are undefined.
    #[error("all importance weights were zero; estimates are undefined")]
    AllWeightsZero,
    #[error("{0}")]
    BadConfig(String),
}

/// Errors raised by the benchmark network generators.
#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    Invalid(String),
}

/// Errors raised by the error-metric and confidence-interval computations.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("marginals have different shapes and cannot be compared")]
    ShapeMismatch,
    /// Batch-means confidence intervals need a cross-chain variance.
    #[error("confidence intervals need at least two chains, got {0}")]
    TooFewChains(usize),
}
