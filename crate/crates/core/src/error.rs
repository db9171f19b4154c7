use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(
        "cholesky factorization failed after {} attempt(s); last jitter {last_jitter:e} (trace: {attempts:?})",
        attempts.len()
    )]
    Factorization { last_jitter: f64, attempts: Vec<f64> },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("ill-conditioned computation: {0}")]
    Conditioning(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Factorization { .. }
                | Error::DegenerateModel(_)
                | Error::Conditioning(_)
                | Error::Infeasible(_)
                | Error::Solver(_)
                | Error::NonFinite(_)
        )
    }
}
