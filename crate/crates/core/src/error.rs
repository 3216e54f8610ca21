use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the admissible range of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or quadrature failed to reach its tolerance.
    #[error("evaluation did not converge: {what} (partial sum {partial_sum:e} after {terms} terms)")]
    Evaluation {
        what: String,
        partial_sum: f64,
        terms: usize,
    },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("regression error: {0}")]
    Regression(String),

    #[error("sweep error: {0}")]
    Sweep(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
