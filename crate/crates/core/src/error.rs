//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series '{id}' is too short: needs at least {needed} observations, got {got}")]
    SeriesTooShort { id: String, needed: usize, got: usize },

    #[error("series '{id}' is degenerate: {reason}")]
    DegenerateSeries { id: String, reason: String },

    #[error("non-finite value at position {index} of series '{id}'")]
    NonFinite { id: String, index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("simulation diverged at step {step} (|x| > {threshold:e})")]
    SimulationDiverged { step: usize, threshold: f64 },

    #[error("gave up after {attempts} consecutive divergent specs")]
    RetryExhausted { attempts: usize },

    #[error("constant input: {0}")]
    ConstantInput(String),

    #[error("no features survived the pre-filter")]
    EmptySurvivors,

    #[error("too few series: needs at least {needed}, got {got}")]
    TooFewSeries { needed: usize, got: usize },

    #[error("unknown forecast method '{0}'")]
    UnknownMethod(String),

    #[error("unknown feature '{0}'")]
    UnknownFeature(String),

    #[error("series '{id}' has no nonzero observations")]
    AllZeroSeries { id: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("roster mismatch: {0}")]
    RosterMismatch(String),

    #[error("weights must be nonnegative and sum to 1 (sum was {sum})")]
    WeightSum { sum: f64 },

    #[error("feature schema mismatch; missing: {}", missing.join(", "))]
    SchemaMismatch { missing: Vec<String> },

    #[error("too few training rows: needs at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("zero scaling denominator: {0}")]
    ZeroDenominator(String),

    #[error("all methods emit identical forecasts; scaled diversity is undefined")]
    DegeneratePool,

    #[error("series ids do not join: {}", ids.join(", "))]
    JoinMismatch { ids: Vec<String> },

    #[error("malformed input at line {line}: {message}")]
    Format { line: u64, message: String },

    #[error("unsupported model version {0}")]
    ModelVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
