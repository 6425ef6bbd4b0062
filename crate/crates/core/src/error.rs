use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The truncated number basis lost too much probability.
    #[error("truncation leakage {leakage:.3e} exceeds threshold {threshold:.3e} (n_trunc = {n_trunc})")]
    Truncation {
        leakage: f64,
        threshold: f64,
        n_trunc: usize,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("malformed joint state: {0}")]
    MalformedState(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("quadrature did not converge: error estimate {error:.3e} after {subdivisions} subdivisions")]
    Quadrature { error: f64, subdivisions: usize },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("unknown device `{0}`")]
    UnknownDevice(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
