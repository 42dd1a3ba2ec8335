use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {achieved:e} above tolerance {requested:e}")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("non-finite integrand value at x = {at}")]
    NonFinite { at: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("resolvent residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResolventTolerance { residual: f64, tolerance: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("scheme instability: non-finite state on path {path} at step {step}")]
    SchemeInstability { path: usize, step: usize },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
