use thiserror::Error;

/// Errors produced by the verification toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension {requested} exceeds the configured maximum {max}")]
    Capacity { requested: usize, max: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("strategy construction failed: {0}")]
    Construction(String),

    #[error("spectral gap is zero; the strategy cannot certify the target")]
    ZeroGap,

    #[error("measurement branch has zero probability for the target")]
    ZeroBranch,

    #[error("measurement is incompatible with the target (Tr(rho Pi_mu) = 0)")]
    IncompatibleMeasurement,

    #[error("linear program did not converge after {iterations} iterations: {trace}")]
    SolverNonConvergence { iterations: usize, trace: String },

    #[error("eigensolver did not converge")]
    EigenNonConvergence,

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
