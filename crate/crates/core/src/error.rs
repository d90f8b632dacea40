//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by solver construction, oracles and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("expected {expected} initial dual vectors, got {got}")]
    DualCountMismatch { expected: usize, got: usize },

    #[error("a problem needs at least one component loss")]
    EmptyProblem,

    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("step size too large: beta = eta * lambda * n = {beta} must be < 1")]
    BetaTooLarge { beta: f64 },

    #[error("component {component} returned a non-finite gradient at iteration {iteration}; state left unchanged")]
    NonFiniteGradient { component: usize, iteration: u64 },

    #[error("matrix entry ({row},{col}) breaks symmetry by {delta}")]
    NotSymmetric { row: usize, col: usize, delta: f64 },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("power iteration did not converge within {max_iter} iterations")]
    PowerIterationStalled { max_iter: usize },

    #[error("average quadratic term is not positive semidefinite: min eigenvalue {min_eigenvalue}")]
    AverageNotPsd { min_eigenvalue: f64 },

    #[error("reference solve stopped at residual {residual}, target {target}")]
    ReferenceResidual { residual: f64, target: f64 },

    #[error("reference dual vectors inconsistent with the minimizer: residual {residual}")]
    ReferenceDualInconsistent { residual: f64 },

    #[error("generator spec is infeasible: {0}")]
    InfeasibleGenerator(String),

    #[error("{path}:{line}: {message}")]
    DatasetParse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("failed to read {path}")]
    DatasetIo {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("exact enumeration over n = {n} components exceeds the guard ({limit}); sample instead")]
    EnumerationGuard { n: usize, limit: usize },

    #[error("decay-rate fit needs at least 2 positive samples, found {found}")]
    TooFewPositiveSamples { found: usize },

    #[error("this check requires every component to be convex; the problem is only convex on average")]
    EachConvexRequired,
}

pub type Result<T> = std::result::Result<T, Error>;

/// Guard for parameters that must be strictly positive and finite.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}
