use thiserror::Error;

/// Errors produced by estimator construction and inference.
#[derive(Debug, Error)]
pub enum Error {
    #[error("population is empty")]
    EmptyPopulation,

    #[error("labeled sample is empty")]
    EmptySample,

    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),

    #[error("inclusion weight {0} is not positive")]
    NonPositiveWeight(f64),

    #[error("bucket count mismatch: data has {data} buckets, config expects {config}")]
    BucketMismatch { data: usize, config: usize },

    #[error("variance {0} is negative")]
    NegativeVariance(f64),

    #[error("need at least two samples for an empirical interval")]
    TooFewSamples,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
