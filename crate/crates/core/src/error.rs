use thiserror::Error;

/// Errors raised by the numeric and modelling layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("count mismatch: expected {expected} elements, got {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("eigen-iteration did not converge")]
    ConvergenceFailure,

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("jitter amplitude {amplitude} produces a non-PSD element (min eigenvalue {min_eigenvalue:e})")]
    InvalidJitter { amplitude: f64, min_eigenvalue: f64 },

    #[error("unsupported dimension {0}: only qubits (p = 2) are supported")]
    UnsupportedDimension(usize),

    #[error("outcome probabilities sum to {total}, not 1")]
    InvalidDistribution { total: f64 },

    #[error(
        "ambiguous region classification: elements {first} and {second} both sit at the weight cut"
    )]
    AmbiguousClassification { first: usize, second: usize },

    #[error("region pair {0} does not occur for this angle")]
    BracketingFailure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
