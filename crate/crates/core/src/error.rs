use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("execution budget exhausted")]
    BudgetExhausted,

    #[error("invalid test input: {0}")]
    InvalidInput(String),

    #[error("invalid input space: {0}")]
    InvalidSpace(String),

    #[error("subject `{0}` has no ground truth")]
    NoGroundTruth(String),

    #[error("too few minority rows for SMOTE: have {have}, k = {k}")]
    TooFewMinority { have: usize, k: usize },

    #[error("dataset too small: {have} rows, need at least {need}")]
    DatasetTooSmall { have: usize, need: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("dataset contains a single class")]
    SingleClass,

    #[error("too many variables for subset enumeration: {0} (cap is 16)")]
    TooManyVariables(usize),

    #[error("too few samples: need at least {need}, got {have}")]
    TooFewSamples { have: usize, need: usize },

    #[error("empty sample")]
    EmptySamples,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}
