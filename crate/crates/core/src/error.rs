use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge (achieved relative error {achieved:e}, requested {requested:e})")]
    QuadratureFailure { achieved: f64, requested: f64 },

    #[error("posterior grid covers only {mass} of the mass after maximum widening")]
    GridCoverage { mass: f64 },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code: 1 for validation problems, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::QuadratureFailure { .. }
            | Error::GridCoverage { .. }
            | Error::NumericalInstability(_) => 2,
            _ => 1,
        }
    }
}
