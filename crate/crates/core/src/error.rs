//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum WlsError {
    /// `beta + 2 - gamma = 0` makes the artificial dimension undefined.
    #[error("degenerate parameters: beta + 2 - gamma = 0 (d={d}, beta={beta}, gamma={gamma})")]
    DegenerateParameters { d: u32, beta: f64, gamma: f64 },

    /// Parameters outside the admissible cone, or a module precondition on them failed.
    #[error("inadmissible or invalid parameters: {0}")]
    InvalidParameters(String),

    /// An argument left the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `r <= q` or a similar exponent-ordering violation.
    #[error("exponent ordering error: {0}")]
    Ordering(String),

    /// Sample vector does not match the rule it is integrated against.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Requested accuracy cannot be certified with the given resolution.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// Richardson disagreement between successive grids.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    /// Two routes that must agree disagreed beyond tolerance. Never downgraded.
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    /// An iteration or extrapolation failed to converge.
    #[error("numerical non-convergence: {0}")]
    NonConvergent(String),

    /// Every member of a search family evaluated to a non-finite objective.
    #[error("degenerate search family: {0}")]
    DegenerateFamily(String),

    /// A positivity requirement was violated.
    #[error("positivity violation: {0}")]
    NotPositive(String),

    /// Time stepping produced values outside the stability envelope.
    #[error("scheme stability failure: {0}")]
    SchemeFailure(String),
}

pub type Result<T> = std::result::Result<T, WlsError>;
