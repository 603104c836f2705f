use thiserror::Error;

use crate::tree::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected through node {0}")]
    Cycle(NodeId),
    #[error("node {parent} already has a {side} child")]
    DuplicateChildSlot { parent: NodeId, side: &'static str },
    #[error("node {0} has more than one parent")]
    MultipleParents(NodeId),
    #[error("node {0} is not connected to the root")]
    Disconnected(NodeId),
    #[error("node {parent} has more than two children")]
    TooManyChildren { parent: NodeId },
    #[error("node id {id} out of range for a tree of {n} nodes")]
    IdOutOfRange { id: u64, n: usize },
    #[error("node {0} is not in the subtree of {1}")]
    NotInSubtree(NodeId, NodeId),
    #[error("node sequence is not a downward path at position {0}")]
    NotAPath(usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("layout does not match tree: {0}")]
    Mismatch(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("instance exceeds search budget: {0}")]
    Budget(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error: 2 for usage errors, 3 for validation
    /// failures, 4 when a resource budget is exceeded. I/O failures map to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Budget(_) => 4,
            _ => 3,
        }
    }
}
