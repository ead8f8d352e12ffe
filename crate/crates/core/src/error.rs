use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{func}: argument outside domain ({detail})")]
    Domain { func: &'static str, detail: String },

    #[error("{func}: result overflows f64")]
    Overflow { func: &'static str },

    #[error("{what}: no convergence after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transition law normalization drifted by {drift:e}")]
    NormalizationDrift { drift: f64 },

    #[error("truncated support needs more than {limit} atoms")]
    TooManyAtoms { limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}

pub(crate) fn invalid(detail: impl Into<String>) -> Error {
    Error::InvalidParameter(detail.into())
}
