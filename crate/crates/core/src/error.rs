use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: String,
        right: String,
    },

    #[error("{what} is not Hermitian: max |A - A†| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotHermitian {
        what: String,
        deviation: f64,
        tolerance: f64,
    },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("{0}")]
    Unsupported(String),

    #[error("invariant `{invariant}` violated at t = {time} (magnitude {magnitude:.3e})")]
    InvariantViolation {
        time: f64,
        invariant: &'static str,
        magnitude: f64,
        /// Everything recorded up to (and including) the offending point.
        partial: Option<Box<Trajectory>>,
    },

    #[error("unknown scenario `{name}`; available: {available}")]
    UnknownScenario { name: String, available: String },

    #[error("unknown parameter key `{key}`")]
    UnknownKey { key: String },

    #[error("parameter `{key}`: expected {expected}, got `{got}`")]
    TypeMismatch {
        key: String,
        expected: &'static str,
        got: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for errors raised by a runtime invariant check rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, Error::InvariantViolation { .. })
    }
}
