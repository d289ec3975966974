use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("parent of node {child} is {parent}, which does not precede it")]
    ArrivalOrder { child: usize, parent: usize },

    #[error("self-loop at node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("edge endpoint {endpoint} out of range for {n} nodes")]
    EndpointOutOfRange { endpoint: usize, n: usize },

    #[error("degree sum {0} is odd")]
    OddDegreeSum(u64),

    #[error("node {0} has degree zero")]
    ZeroDegree(usize),

    #[error("average path length needs at least two nodes")]
    NoNodePairs,

    #[error("no trees at or above the minimum size {0}")]
    EmptyBins(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cascade `{cascade}`: {message}")]
    Integrity { cascade: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
