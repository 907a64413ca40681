use thiserror::Error;

/// Errors raised by the fitting pipeline, the generators and the oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {what} at row {row}")]
    NonFinite { what: &'static str, row: usize },

    #[error("too few points: {retained} retained observations, at least {required} needed")]
    TooFewPoints { retained: usize, required: usize },

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("invalid dataset: {0}")]
    BadDataset(String),

    #[error("variance must be strictly positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("every component has zero density at observation {index}")]
    DegenerateDensity { index: usize },

    #[error("all weights are zero")]
    ZeroWeights,

    #[error("all values to be truncated are zero")]
    DegenerateValues,

    #[error("regression weights sum to zero")]
    ZeroWeight,

    #[error("component(s) {components:?} received no posterior mass")]
    EmptyComponent { components: Vec<usize> },

    #[error("symmetric eigendecomposition did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("start failed: {0}")]
    StartFailed(String),

    #[error("all {starts} random starts failed")]
    AllStartsFailed { starts: usize },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("exhaustive search over n = {n} observations is too large (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
