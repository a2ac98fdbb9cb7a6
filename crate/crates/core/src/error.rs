use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("level mismatch: requested level {requested} but function is at level {actual}")]
    Level { requested: u32, actual: u32 },

    #[error("breakpoint {0} is not a dyadic rational")]
    NonDyadic(String),

    #[error("refinement to level {needed} exceeds the configured cap {cap}")]
    LevelCap { needed: u32, cap: u32 },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("malformed norm specification: {0}")]
    NormSpec(String),

    #[error("solver failed to bracket the norm: {0}")]
    Bracket(String),

    #[error("no convergence after {iterations} iterations (best bounds [{lower}, {upper}])")]
    NoConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error("operator is not invertible: multiplier on piece {0} vanishes")]
    NotInvertible(usize),

    #[error("pseudo-integral terms {first} and {second} coincide on {interval}")]
    Distinctness {
        first: usize,
        second: usize,
        interval: String,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
