use thiserror::Error;

/// Errors raised by bound evaluation, simulation and configuration handling.
#[derive(Debug, Error)]
pub enum Error {
    /// A numerical argument lies outside the domain of a function, or a
    /// covariance matrix is unphysical.
    #[error("domain error: {0}")]
    Domain(String),

    /// Protocol or experiment parameters are invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Parameters are valid but no non-trivial bound exists anywhere in the
    /// requested range.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    /// Vectors or matrices of incompatible shape were combined.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
