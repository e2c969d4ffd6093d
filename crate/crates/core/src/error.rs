use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contributions undefined for groups smaller than 2")]
    GroupTooSmall,

    #[error("group-relative signal requires at least two groups")]
    TooFewGroups,

    #[error("supergroup-relative advantages need at least two rollouts, got {0}")]
    TooFewRollouts(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("utility is NaN for rollout (m={m}, i={i})")]
    NanUtility { m: usize, i: usize },

    #[error("rollout (m={m}, i={i}) has not been scored")]
    Unscored { m: usize, i: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("{count} balanced partitions exceed the enumeration limit {limit}; use the Monte-Carlo check")]
    EnumerationLimit { count: f64, limit: f64 },

    #[error("empty operating-point set")]
    EmptyPointSet,

    #[error("checkpoint parse error at line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },

    #[error("non-finite {what} at step {step}")]
    NonFinite {
        step: usize,
        what: &'static str,
        bundle: Box<crate::advantage::AdvantageBundle<f64>>,
    },
}
