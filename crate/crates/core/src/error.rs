use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unsupported setting: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(
        "requested {requested} components but only {available} are available \
         ({reason}); use a smaller component count"
    )]
    Rank {
        requested: usize,
        available: usize,
        reason: String,
    },

    #[error(
        "singular Gamma: smallest eigenvalue {min_eig:e} is below 1e-12 times the largest ({max_eig:e})"
    )]
    SingularGamma { min_eig: f64, max_eig: f64 },

    #[error("ill-conditioned inference: {matrix} has condition number {condition:e} (limit 1e12)")]
    IllConditioned { matrix: &'static str, condition: f64 },

    #[error("view `{view}` uses a {kernel} kernel; {operation} requires a linear kernel")]
    WrongKernel {
        view: String,
        kernel: &'static str,
        operation: &'static str,
    },

    #[error("unknown view `{0}`")]
    UnknownView(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
