use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Variants are grouped by what went wrong rather than where: callers such as
/// the CLI map them onto exit codes (parameter problems versus numerical
/// failures).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integral diverges ({context}): {detail}")]
    Divergence { context: String, detail: String },

    #[error("consistency check failed: {context} (residual {residual:e} > tolerance {tolerance:e})")]
    Consistency {
        context: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("invalid recovery schedule: {0}")]
    Schedule(String),

    #[error("recovery unstable: {0}")]
    RecoveryInstability(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("insufficient tail data: need at least {needed} points below the window, got {got}")]
    InsufficientTail { needed: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid configuration: {0}")]
    Spec(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            value,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::Consistency { .. }
                | Error::RecoveryInstability(_)
                | Error::Resolution(_)
                | Error::InsufficientTail { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
