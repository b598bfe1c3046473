// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at position {position} in {input:?}: {message}")]
    Parse {
        input: String,
        position: usize,
        message: String,
    },

    #[error("derivative of order {order} unavailable for {what}")]
    DerivativeUnavailable { order: usize, what: String },

    #[error("weight vanishes at x = {x}")]
    VanishingWeight { x: f64 },

    #[error("x = {x} outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("non-finite value of {what} at x = {x}")]
    NonFinite { what: String, x: f64 },

    #[error("divergent mass: {0}")]
    Divergent(String),

    #[error("monotonicity violated: {0}")]
    NotMonotone(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("unreliable bound: {0}")]
    Unreliable(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True when the failure comes from the input (a violated precondition or
    /// an inapplicable bound) rather than from the numerics.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Parse { .. }
                | Error::Inapplicable(_)
                | Error::Divergent(_)
                | Error::Unreliable(_)
                | Error::Insufficient(_)
        )
    }

    /// The same error with its message prefixed by a decomposition level.
    pub(crate) fn at_level(self, level: usize) -> Self {
        let tag = |m: String| format!("level {level}: {m}");
        match self {
            Error::NotMonotone(m) => Error::NotMonotone(tag(m)),
            Error::NoConvergence(m) => Error::NoConvergence(tag(m)),
            Error::Validation(m) => Error::Validation(tag(m)),
            Error::Unreliable(m) => Error::Unreliable(tag(m)),
            Error::Insufficient(m) => Error::Insufficient(tag(m)),
            Error::Divergent(m) => Error::Divergent(tag(m)),
            other => other,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
