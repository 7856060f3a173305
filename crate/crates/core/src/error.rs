use thiserror::Error;

use crate::state::State;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A kernel row is not a probability vector.
    #[error("invalid kernel row at state {state}: {reason}")]
    KernelInvalid { state: State, reason: String },

    #[error("non-finite function value {value} at state {state}")]
    NonFinite { state: State, value: f64 },

    #[error("{excluded} of {total} samples produced non-finite values (strict mode)")]
    ExcludedSamples { excluded: usize, total: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("combined support {size} exceeds the transport cap {cap}; use the 1-D fast path or subsample")]
    SupportTooLarge { size: usize, cap: usize },

    #[error("state {0} has no real-line embedding")]
    NotEmbeddable(State),

    #[error("unsupported capability: {0}")]
    Unsupported(String),

    #[error("transport solver failed: {0}")]
    Solver(String),

    #[error("invalid grid field `{field}`: {reason}")]
    InvalidGrid { field: String, reason: String },

    #[error("unknown {kind} `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("parse error: {0}")]
    Parse(String),

    /// Both sides of a stability equivalence disagree.
    #[error("equivalence consistency violated: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn grid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidGrid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
