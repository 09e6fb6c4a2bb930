use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    /// An operation was called on inputs it is not defined for (wrong slot
    /// kind, mismatched dimensions).
    #[error("misuse: {0}")]
    Misuse(String),

    #[error("{what} is numerically singular (condition number {condition:.3e})")]
    Singular { what: String, condition: f64 },

    #[error("{what} is not positive semi-definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { what: String, min_eigenvalue: f64 },

    #[error("{what} is not positive definite")]
    NotPd { what: String },

    #[error("fixed point did not converge after {iterations} iterations (last residual {:.3e})", residuals.last().copied().unwrap_or(f64::NAN))]
    NoConvergence { iterations: usize, residuals: Vec<f64> },

    #[error("candidate {layout:?}: {source}")]
    Candidate { layout: Vec<usize>, source: Box<Error> },

    #[error("all {} candidates failed", .0.len())]
    AllCandidatesFailed(Vec<(Vec<usize>, Error)>),
}

impl Error {
    pub(crate) fn invalid_arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn scenario(msg: impl Into<String>) -> Self {
        Error::InvalidScenario(msg.into())
    }

    pub(crate) fn layout(msg: impl Into<String>) -> Self {
        Error::InvalidLayout(msg.into())
    }

    pub(crate) fn misuse(msg: impl Into<String>) -> Self {
        Error::Misuse(msg.into())
    }
}
