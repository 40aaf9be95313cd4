use alloc::string::String;

/// Errors raised by the model, observation and inference layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid size grid: {0}")]
    InvalidGrid(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("state length {got} does not match grid with {expected} classes")]
    DimensionMismatch { expected: usize, got: usize },

    /// The truncated-normal normaliser of a growth or recruitment row
    /// underflowed to zero: the grid does not cover the growth distribution.
    #[error("degenerate growth distribution (row {row}): normaliser underflowed")]
    DegenerateGrowth { row: usize },

    #[error("stochastic mode requires integer counts; class {class} holds {value}")]
    NonIntegerState { class: usize, value: f64 },

    #[error("expected recruits are zero (no eggs)")]
    ZeroExpectedRecruits,

    #[error("no model prediction for {0}")]
    MissingPrediction(String),

    #[error("survey regime {0} has no catchability parameter")]
    UnknownSurveyId(u32),

    #[error("latent noise covers {available} years, year {requested} requested")]
    NoiseTooShort { available: usize, requested: usize },

    #[error("prior set: {0}")]
    PriorSet(String),

    #[error("invalid chain configuration: {0}")]
    InvalidChainConfig(&'static str),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("initial log-posterior is -inf after {0} prior draws")]
    NonFiniteInit(usize),

    #[error("cannot summarise an empty sample")]
    EmptySample,
}

pub type Result<T> = core::result::Result<T, Error>;
