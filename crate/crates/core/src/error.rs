use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading or querying sparse matrices.
#[derive(Debug, Error)]
pub enum SparseError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("matrix market format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("entry ({row}, {col}) is outside a {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("matrix is not symmetric: entry ({row}, {col}) has no matching transpose value")]
    Asymmetric { row: usize, col: usize },
    #[error("dof {dof} is not active in the trailing matrix")]
    StaleIndex { dof: usize },
}

/// Dense factorization failures.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DenseError {
    #[error("non-positive pivot {value:e} at index {pivot}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
}

/// Failures of the hierarchical factorization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error("cholesky breakdown at level {level}, cluster {cluster}, pivot {pivot} ({stage})")]
    Breakdown { level: usize, cluster: usize, pivot: usize, stage: &'static str },
    #[error("hierarchy covers {hierarchy} vertices but the matrix has {matrix} rows")]
    DimensionMismatch { hierarchy: usize, matrix: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("preconditioner is not positive definite: <z, r> = {0:e} at iteration {1}")]
    IndefinitePreconditioner(f64, usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// Problems with ordering inputs.
#[derive(Debug, Error)]
pub enum OrderingError {
    #[error("level count must be at least 1")]
    ZeroLevels,
    #[error("coordinates given for {got} vertices, graph has {expected}")]
    CoordsMismatch { expected: usize, got: usize },
    #[error("coordinate file {path}: {msg}")]
    CoordsFile { path: PathBuf, msg: String },
}
