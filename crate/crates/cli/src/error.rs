use thiserror::Error;

/// Process exit status for each outcome.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const EVALUATION: i32 = 3;
    pub const UNCONVERGED: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{failed} of {total} trials failed; first failure: {first}")]
    TrialsFailed { failed: usize, total: usize, first: String },
    #[error("{0} trial(s) did not converge within the budget")]
    Unconverged(usize),
    #[error("malformed file {path}: {message}")]
    Malformed { path: String, message: String },
    #[error(transparent)]
    Core(#[from] activo_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit_code::CONFIG,
            CliError::TrialsFailed { .. } => exit_code::EVALUATION,
            CliError::Core(activo_core::Error::Evaluation { .. } | activo_core::Error::Protocol { .. }) => {
                exit_code::EVALUATION
            }
            CliError::Core(activo_core::Error::Domain(_)) => exit_code::CONFIG,
            CliError::Unconverged(_) => exit_code::UNCONVERGED,
            _ => exit_code::IO,
        }
    }
}
