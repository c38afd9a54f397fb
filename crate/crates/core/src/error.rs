use thiserror::Error;

use crate::matrices::MetricViolation;

/// Errors across matrix construction, solvers, and serialization.
/// Indices in messages are 1-based.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e} relative to scale")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("diagonal entry a[{i}][{i}] = {value:e} is not zero")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error("non-finite entry at [{i}][{j}]")]
    NonFinite { i: usize, j: usize },

    #[error("not a metric: {0}")]
    NotMetric(MetricViolation),

    #[error("power exponent {0} outside (0, 1]")]
    PowerOutOfRange(f64),

    #[error("n = {n} exceeds the permutation enumeration cap {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid bistochastic matrix: {0}")]
    NotBistochastic(String),

    #[error("no perfect matching on the positive support; input is not bistochastic")]
    NoPerfectMatching,

    #[error("basis is not orthonormal: max deviation {0:e} from F^T F = I")]
    NotOrthonormal(f64),

    #[error(
        "squared distance {value:e} at ({i}, {j}) is negative beyond tolerance; not a Gram matrix"
    )]
    NegativeSquaredDistance { i: usize, j: usize, value: f64 },

    #[error("space is not embeddable: minimum Gram eigenvalue {min_eig:e}")]
    NotEmbeddable { min_eig: f64 },

    #[error("tensor definiteness check capped at n <= {cap}, got n = {n}")]
    TensorCap { n: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-negative-type filter exhausted after {attempts} draws at n = {n}")]
    FilterExhausted { n: usize, attempts: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
