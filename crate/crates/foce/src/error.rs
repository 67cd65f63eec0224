//! Crate-wide error type.

/// Errors surfaced by the library.
///
/// `TheoremViolation` is special: it marks a measured quantity exceeding a
/// proven bound, which callers treat as a hard failure (the CLI exits with
/// status 2 on it) rather than an input problem.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible point: {0}")]
    Infeasible(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("not auditable: the game exposes no utility evaluator")]
    NotAuditable,

    #[error("curve is not differentiable at tau = {0} (breakpoint)")]
    Breakpoint(f64),

    #[error("theorem bound violated: {0}")]
    TheoremViolation(String),

    #[error("fixed-point oracle failed: {0}")]
    OracleFailure(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
