use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract-shape error: mode {label} has size {left} on one side and {right} on the other")]
    ContractShape { label: u64, left: usize, right: usize },

    #[error("unknown mode label {0}")]
    UnknownLabel(u64),

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("matrix is not positive semidefinite: eigenvalue {value} below tolerance {tolerance}")]
    NotPsd { value: f64, tolerance: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("edge sets overlap at label {0}")]
    OverlappingEdgeSets(u64),

    #[error("orderings are over different sets")]
    OrderingMismatch,

    #[error("embedding tree does not match network: {0}")]
    TreeMismatch(String),

    #[error("inconsistent plan: {0}")]
    InvalidPlan(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state space of {0} configurations exceeds the brute-force limit")]
    TooLarge(u128),

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
