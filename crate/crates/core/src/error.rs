use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) out of range for a {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("matrix is not symmetric: ({row}, {col}) = {upper} but ({col}, {row}) = {lower}")]
    Asymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix not SPD: non-positive pivot {pivot:e} at index {index}")]
    NotSpd { index: usize, pivot: f64 },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate matrix pair: generalized eigenvalues are all zero")]
    DegeneratePair,

    #[error("conjugate gradient did not reach {tol:e} within {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged {
        iterations: usize,
        residual: f64,
        tol: f64,
        best: Vec<f64>,
    },

    #[error("dense computation limited to n <= {limit}, got {n}")]
    SizeGuard { n: usize, limit: usize },

    #[error("W not SPD: minimum eigenvalue {min_eig:e}")]
    WNotSpd { min_eig: f64 },

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
