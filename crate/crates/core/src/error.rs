use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("training did not converge after {iterations} iterations (KKT residual {residual:e})")]
    Training { iterations: usize, residual: f64 },

    /// Evaluator failed (process error, timeout, nonzero exit).
    #[error("evaluation error at iteration {iteration}: {message}")]
    Evaluation { iteration: usize, message: String },

    /// Evaluator replied, but the reply breaks the file protocol.
    #[error("protocol error at iteration {iteration}: {message}")]
    Protocol { iteration: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
