use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("operation not supported for this source: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: {what} (achieved {achieved:.3e}, wanted {wanted:.3e})")]
    NonConvergence {
        what: String,
        achieved: f64,
        wanted: f64,
    },

    #[error("detector array is unphysical: eigenvalue {eigenvalue} of the summed detector matrix exceeds 1")]
    Physicality { eigenvalue: f64 },

    #[error("conditioning outcome has probability {0:e}, below the floor")]
    ZeroProbability(f64),

    #[error("outcome outside the mean-field range (u = {0})")]
    OutsideRange(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("cost gate: {0}")]
    TooExpensive(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
