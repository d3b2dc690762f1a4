use alloc::string::String;

use crate::graph::NetworkId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("unknown network `{0}`")]
    UnknownNetwork(NetworkId),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request is well formed but cannot be satisfied by the data or the
    /// parameter combination.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("account {0} is already matched")]
    DuplicateMatch(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite value for feature `{feature}` in instance {instance}")]
    NonFiniteFeature { instance: String, feature: String },

    #[error("dimension mismatch: model expects {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate contingency table: {0}; try fewer bins")]
    DegenerateTable(String),

    #[error("zero variance on {0}")]
    ZeroVariance(&'static str),

    #[error("k = {k} is outside 1..={len}")]
    KOutOfRange { k: usize, len: usize },
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_))
    }
}
