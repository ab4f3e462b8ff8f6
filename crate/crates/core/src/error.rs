use thiserror::Error;

/// Errors raised by model construction, likelihood evaluation, estimation
/// and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("degenerate pair: {0}")]
    DegeneratePair(String),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("objective is not finite at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("optimum still on the search bracket edge after {0} expansions")]
    BracketExhausted(usize),

    #[error("index error: {0}")]
    Index(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
