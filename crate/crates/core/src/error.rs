use thiserror::Error;

/// Errors shared by all numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series or quadrature failed to reach the requested tolerance.
    #[error("convergence error: {what} (achieved {achieved:e}, requested {requested:e})")]
    Convergence {
        what: String,
        achieved: f64,
        requested: f64,
    },
    /// A linear-algebra or floating-point failure (e.g. Cholesky breakdown).
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
