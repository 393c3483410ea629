use std::path::PathBuf;

use thiserror::Error;

use crate::splitstep::Field2D;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian ({detail})")]
    SingularJacobian { detail: String },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("profile interpolation out of range at r = {r}")]
    OutOfRange { r: f64 },

    #[error("continuation corrector diverged (step {nu:.3e})")]
    CorrectorDiverged { nu: f64 },

    #[error("bordered system is rank deficient")]
    RankDeficient,

    #[error("non-finite value after step {step} (t = {time})")]
    NonFinite {
        step: usize,
        time: f64,
        last_good: Box<Field2D>,
    },

    #[error("norm-growth bound violated on {violations} steps")]
    NormBound { violations: usize },

    #[error("empty profile: {0}")]
    EmptyProfile(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Parse { .. } | Error::DimensionMismatch { .. }
        )
    }
}
