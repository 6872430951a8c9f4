use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subset: expected {expected} distinct arms, got {got}")]
    InvalidSubset { expected: usize, got: usize },
    #[error("arm index {arm} out of range for {n} arms")]
    InvalidArm { arm: usize, n: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no Hadamard construction for {0}")]
    NotConstructible(String),
    #[error("no constructible Hadamard order found for k={k} within multiple cap {cap}")]
    NoOrderFound { k: usize, cap: usize },
    #[error("group size {k} does not divide half-order {half}")]
    InvalidGrouping { k: usize, half: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("problem too large for exhaustive enumeration: n={n} (max {max})")]
    TooLarge { n: usize, max: usize },
    #[error("padding pool exhausted: need {needed} more arms")]
    PaddingExhausted { needed: usize },
    #[error("random design stayed singular after {0} draws")]
    DegenerateDesign(usize),
    #[error("all {0} subset slots are taken by accepted arms")]
    AllAccepted(usize),
    #[error("gap is zero; no finite phase bound")]
    Unbounded,
    #[error("no data left after filtering")]
    NoData,
    #[error("pull budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("no termination after {0} phases")]
    NonTermination(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
