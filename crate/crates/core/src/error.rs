//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`] so callers (the CLI in
//! particular) can map validation failures and I/O failures to distinct
//! exit codes.

/// Errors produced by oracles, estimators, packing construction, and the
/// experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector argument had the wrong length for the target object.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The oracle's query budget is spent; further queries are refused.
    #[error("query budget exhausted: all {budget} oracle calls used")]
    BudgetExhausted { budget: u64 },

    /// The budget does not admit even one central-difference pair per
    /// coordinate (requires T >= 2d).
    #[error("budget T={budget} too small for d={d}: need T >= 2d for one pair per coordinate")]
    BudgetTooSmall { budget: u64, d: usize },

    /// A queried or probed point lies outside the query domain.
    #[error("point lies outside the query domain")]
    OutsideDomain,

    /// A step size resolved to a non-positive value (e.g. the base point
    /// sits on the domain boundary).
    #[error("step size must be positive, got {h}")]
    NonPositiveStep { h: f64 },

    /// Greedy packing construction ran out of retry budget before hitting
    /// the target size. Random sign vectors reach the target with
    /// overwhelming probability, so this signals a bug or a bad target.
    #[error("packing for d={d} reached only {kept} of {target} vectors after {draws} draws")]
    PackingExhausted {
        d: usize,
        target: usize,
        kept: usize,
        draws: u64,
    },

    /// An operation needs at least two packing vectors.
    #[error("packing set needs at least two vectors")]
    PackingTooSmall,

    /// The gradient discrepancy is zero, so decoding is undefined.
    #[error("gradient discrepancy is zero; decoding is undefined")]
    ZeroDiscrepancy,

    /// The domain admits payloads larger than the adversarial oracle's
    /// variance budget allows (sup |h_i| must stay <= 2 sigma).
    #[error("adversarial oracle refused: sup |h_i| = {cap} exceeds 2*sigma = {limit}")]
    VarianceCapExceeded { cap: f64, limit: f64 },

    /// A rate fit needs at least three points along the chosen axis.
    #[error("rate fit needs at least 3 points along the axis, got {got}")]
    TooFewPoints { got: usize },

    /// Catch-all for scalar/config validation with a one-line diagnostic.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Filesystem failure while emitting or reading results.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for [`Error::InvalidParameter`] used by validation sites.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
