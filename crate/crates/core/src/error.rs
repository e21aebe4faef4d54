use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {0} is not a sign (expected +1 or -1)")]
    InvalidSign(i64),

    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("state {0} is not GHZ-compatible (z components differ)")]
    NotGhzCompatible(String),

    #[error("invalid outcome {0:?} (expected +1 or -1)")]
    InvalidOutcome(String),

    #[error("invalid site {0:?} (expected axis x|y|z followed by particle 1|2|3)")]
    InvalidSite(String),

    #[error("incompatible context: {0}")]
    IncompatibleContext(String),

    #[error("outcomes do not match context: {0}")]
    OutcomeMismatch(String),

    #[error("invalid detection flag {0:?} (expected \"D\" or \"U\")")]
    InvalidFlag(String),

    #[error("conditional probability undefined: context {0} is never detected")]
    UndefinedConditional(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model {0:?} does not assign the same detection family to every state of a partition element")]
    NotElementUniform(String),

    #[error("unbounded search spec: set failure_count, an upper bound on ddists_per_state, or limit")]
    UnboundedSearch,

    #[error("invalid search spec: {0}")]
    InvalidSearchSpec(String),

    #[error("unknown model selector {0:?} (expected M3, M1 or M2)")]
    UnknownModel(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
