//! Crate-wide error type.

/// Errors reported by operator assembly, decompositions and pipeline drivers.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("dense dimension cap exceeded: {dim} > {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("rank deficient: smallest singular value {sigma:.6e} <= tolerance {tol:.1e}")]
    RankDeficient { sigma: f64, tol: f64 },

    #[error("structure violation: {0}")]
    Structure(String),

    #[error("index-1 condition failed: {0}")]
    Index(String),

    #[error("inconsistent data: {0}")]
    Inconsistent(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(
        "singular-value gap violation: sigma = {sigma:.6e} lies outside {{0}} ∪ [{gamma:.6e}, {alpha:.6e}]"
    )]
    GapViolation { sigma: f64, gamma: f64, alpha: f64 },

    #[error("numerical factorization failed: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
