use thiserror::Error;

/// Errors raised by banded kernels, model builders and inference routines.
///
/// Row and column indices carried by variants are 0-based.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("entry ({row}, {col}) = {value} lies outside the declared band")]
    NonzeroOutsideBand { row: usize, col: usize, value: f64 },

    #[error("index ({row}, {col}) is outside the band (lower {lower}, upper {upper}) of an {n}x{n} matrix")]
    OutOfBand {
        row: usize,
        col: usize,
        lower: usize,
        upper: usize,
        n: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite: pivot at row {0} is not positive")]
    NotPositiveDefinite(usize),

    #[error("triangular factor has a singular diagonal at row {0}")]
    SingularDiagonal(usize),

    #[error("triangular factor has a non-positive diagonal at row {0}")]
    NonPositiveDiagonal(usize),

    #[error("expected a lower-triangular banded matrix (upper bandwidth {0})")]
    NotLowerTriangular(usize),

    #[error("time stamps must be strictly increasing (violated at index {0})")]
    NonIncreasingTimes(usize),

    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },

    #[error("state-space models to stack do not share a time grid")]
    TimeGridMismatch,

    #[error("dense block `{0}` is singular or not positive definite")]
    SingularBlock(&'static str),

    #[error("edge references unknown node {node} (graph has {num_nodes} nodes)")]
    UnknownNode { node: usize, num_nodes: usize },

    #[error("node {0} has no incident edge")]
    IsolatedNode(usize),

    #[error("invalid edge: {0}")]
    InvalidEdge(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("innovation covariance is singular at step {0}")]
    SingularInnovation(usize),

    #[error("backward requires a scalar output node")]
    NonScalarOutput,

    #[error("tape has already been consumed by a backward pass")]
    TapeConsumed,

    #[error("node {0} does not belong to this tape")]
    ForeignNode(usize),

    #[error("operand has the wrong kind: expected {expected}, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("objective is not finite at the current parameters")]
    NonFiniteObjective,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
