use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The offspring pool is smaller than the parent population.
    #[error("lambda ({lambda}) must be at least mu ({mu})")]
    LambdaBelowMu { mu: usize, lambda: usize },

    /// Inputs lie outside the hypothesis of the statement being checked.
    #[error("outside hypothesis: {0}")]
    OutsideHypothesis(String),

    #[error("exact computation guard violated: {0}")]
    Guard(String),

    #[error("trace too short: need {needed} generations, got {got}")]
    TraceTooShort { needed: usize, got: usize },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown checker `{0}`")]
    UnknownChecker(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
