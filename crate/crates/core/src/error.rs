use thiserror::Error;

use crate::model::ValidationReport;

/// Errors raised by the fusion pipeline.
///
/// [`CfaError::is_input_error`] separates malformed input data from bad
/// configuration so callers can map them to distinct exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfaError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid score table: {0}")]
    InvalidTable(ValidationReport),

    #[error("unknown system {0}")]
    UnknownSystem(String),

    #[error("normalization parameters missing for system {0}")]
    MissingNormalization(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("table has no labels")]
    MissingLabels,

    #[error("zero weight for system {0} cannot be inverted")]
    ZeroWeight(String),

    #[error("invalid weight for system {system}: {value}")]
    InvalidWeight { system: String, value: f64 },

    #[error("weights sum to zero")]
    ZeroWeightSum,

    #[error("expected a {expected} column, got {got}")]
    KindMismatch { expected: &'static str, got: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CfaError {
    pub fn config(msg: impl Into<String>) -> Self {
        CfaError::Config(msg.into())
    }

    /// True for errors caused by the content of an input file.
    pub fn is_input_error(&self) -> bool {
        matches!(self, CfaError::Parse { .. } | CfaError::InvalidTable(_))
    }
}

pub type Result<T> = std::result::Result<T, CfaError>;
