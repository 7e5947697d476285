//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by state construction, probability routes, sampling and
/// the scenario calculators.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its domain (negative rate, efficiency beyond
    /// `[0, 1]`, non-finite input, ...).
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The state has no Gaussian phase-space description.
    #[error("state `{0}` is not Gaussian")]
    NotGaussian(String),

    /// The state has no closed-form diagonal P representation.
    #[error("state `{0}` has no closed-form P representation")]
    NoPRepresentation(String),

    /// The truncated Fock space leaks more probability than allowed.
    #[error(
        "Fock truncation insufficient: tail mass {tail:.3e} at dimension {dim} \
         (suggested dimension >= {suggested})"
    )]
    Truncation {
        tail: f64,
        dim: usize,
        suggested: usize,
    },

    /// A quantity is mathematically undefined for the given input
    /// (for example Mandel Q of the vacuum).
    #[error("{what} is undefined: {reason}")]
    Undefined { what: String, reason: String },

    /// The requested model is outside its regime of validity
    /// (for example a per-step click probability above one).
    #[error("model breakdown: {0}")]
    ModelBreakdown(String),

    /// The operation is not provided by the selected route.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end: 2 for usage and
    /// validation problems, 3 for numerical-validity failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Truncation { .. } | Error::ModelBreakdown(_) => 3,
            _ => 2,
        }
    }
}
