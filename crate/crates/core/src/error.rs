use thiserror::Error;

/// Errors produced by the library. The CLI maps these onto exit codes via
/// [`Error::class`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("sampling failed: {0}")]
    SamplingFailure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no acyclic ball found: {0}")]
    NotFound(String),

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    #[error("peeling stuck: no vertex among {remaining:?} has {required} unique neighbours")]
    PeelStuck {
        remaining: Vec<usize>,
        required: usize,
    },

    #[error("zero vector")]
    ZeroVector,

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("attack failed: {0}")]
    AttackFailed(String),

    #[error("invalid ball: {0}")]
    InvalidBall(String),

    #[error("invalid delta: {0}")]
    InvalidDelta(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("file format error at line {line}: {msg}")]
    FileFormat { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse failure classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Budget,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParams(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidDelta(_)
            | Error::PreconditionFailed(_)
            | Error::HypothesisViolated(_)
            | Error::FileFormat { .. }
            | Error::Json(_) => ErrorClass::Config,
            Error::BudgetExceeded { .. } => ErrorClass::Budget,
            Error::SamplingFailure(_)
            | Error::NotFound(_)
            | Error::PeelStuck { .. }
            | Error::ZeroVector
            | Error::RankDeficient(_)
            | Error::NoConvergence { .. }
            | Error::AttackFailed(_)
            | Error::InvalidBall(_) => ErrorClass::Numerical,
            Error::Io(_) => ErrorClass::Io,
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::SamplingFailure(_) => "SamplingFailure",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotFound(_) => "NotFound",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::PeelStuck { .. } => "PeelStuck",
            Error::ZeroVector => "ZeroVector",
            Error::RankDeficient(_) => "RankDeficient",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::AttackFailed(_) => "AttackFailed",
            Error::InvalidBall(_) => "InvalidBall",
            Error::InvalidDelta(_) => "InvalidDelta",
            Error::PreconditionFailed(_) => "PreconditionFailed",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::FileFormat { .. } => "FileFormat",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
