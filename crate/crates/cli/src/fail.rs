//! CLI failure type and its mapping onto process exit codes.
//!
//! Exit codes: 0 success, 2 usage (raised by the argument parser itself),
//! 3 unusable input, 4 zero-probability evidence, 5 resource cap exceeded.

use cutset_core::error::{GenError, InferenceError, MetricsError, ModelError, SampleError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Missing or malformed files, or parameter values that fail validation.
    #[error("{0}")]
    Input(String),
    /// The observed evidence has probability zero under the model, so the
    /// requested posteriors do not exist.
    #[error("zero-probability evidence{}", fmt_detail(.0))]
    ZeroEvidence(Option<String>),
    /// A run would exceed a configured memory or enumeration cap.
    #[error("{0}")]
    Cap(String),
}

fn fmt_detail(detail: &Option<String>) -> String {
    match detail {
        Some(d) => format!(": {d}"),
        None => String::new(),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 3,
            CliError::ZeroEvidence(_) => 4,
            CliError::Cap(_) => 5,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::ZeroEvidence => CliError::ZeroEvidence(None),
            InferenceError::CapExceeded { .. } => CliError::Cap(e.to_string()),
        }
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::Inference(inner) => inner.into(),
            // Both failures mean no positive-probability state was ever
            // reached; with valid inputs that points at the evidence.
            SampleError::InitFailed(_) | SampleError::AllWeightsZero => {
                CliError::ZeroEvidence(Some(e.to_string()))
            }
            SampleError::BadConfig(msg) => CliError::Input(msg),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Input(e.to_string())
    }
}
