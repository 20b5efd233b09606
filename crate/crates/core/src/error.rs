use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (deviation {deviation:e} > {tolerance:e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid density matrix: trace {0} deviates from 1")]
    InvalidState(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix ({a}, {b}; {c}, {d}) has determinant {det}, expected 1")]
    NotUnimodular { a: i64, b: i64, c: i64, d: i64, det: i64 },

    #[error("map with trace {0} is not hyperbolic (|trace| must exceed 2)")]
    NotHyperbolic(i64),

    #[error("lattice resolution {m} is too coarse: {reason}")]
    ResolutionTooCoarse { m: usize, reason: String },

    #[error("representation parameters (u, v) = ({u}, {v}) violate the folding congruence")]
    IncompatibleParameters { u: String, v: String },

    #[error("operation needs a cat map but the Weyl context carries none")]
    MissingDynamics,

    #[error("function is not a trigonometric polynomial")]
    NotTrigPolynomial,

    #[error("partition side {q_side} does not divide N = {n}")]
    IndivisibleGrid { q_side: usize, n: usize },

    #[error("refinement too large: {0}")]
    BudgetExceeded(String),

    #[error("probability row leaves the simplex by {0:e}")]
    SimplexViolation(f64),

    #[error("partition of unity defect {0:e}")]
    UnityDefect(f64),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
