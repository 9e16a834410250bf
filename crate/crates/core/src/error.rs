use thiserror::Error;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degree list is empty")]
    Empty,
    #[error("negative degree {value} at vertex {index}")]
    NegativeDegree { index: usize, value: i64 },
    #[error("degree sum {total} is odd")]
    OddSum { total: u64 },
    #[error("degree {value} at vertex {index} does not fit in 32 bits")]
    DegreeOverflow { index: usize, value: i64 },
    #[error("no valid degree assignment for total {total}")]
    TooSmall { total: u64 },
    #[error("bipartite sides disagree: left sum {left}, right sum {right}")]
    SideMismatch { left: u64, right: u64 },
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("pair ({0}, {0}) is not a pair of distinct vertices")]
    SameVertex(usize),
    #[error("moment order {order} exceeds the configured maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("{total} half-edges exceeds the enumeration cap {max}")]
    TooLarge { total: u64, max: u64 },
    #[error("no simple pairing within {tries} tries")]
    Exhausted { tries: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
