use thiserror::Error;

/// Errors produced by model construction, inversion and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a type invariant (range, ordering, normalization).
    #[error("invalid parameter: {0}")]
    Domain(String),

    /// The master sum would need more terms than the configured maximum.
    #[error("pair-number truncation needs more than {max} terms (mu/tolerance combination is pathological)")]
    TruncationLimit { max: usize },

    /// A conditional or ratio is undefined because its denominator vanishes.
    #[error("undefined quantity: {0}")]
    Undefined(String),

    /// A requested value lies outside the attainable range of the model.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// The target value never intersects the computed curve.
    #[error("no intersection: {0}")]
    NoIntersection(String),

    /// Measured data is inconsistent with the single-pair model assumptions.
    #[error("model consistency: {0}")]
    Inconsistency(String),

    /// A numerical routine failed to converge or hit a degenerate system.
    #[error("solver: {0}")]
    Solver(String),

    /// Malformed input data, with a line number where applicable.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
