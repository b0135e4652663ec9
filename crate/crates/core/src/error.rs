use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical evaluation did not converge: {0}")]
    NonConvergence(String),

    /// The asymptotic tail series stopped decreasing before the requested order.
    #[error("tail series diverges at z = {z} for {n_terms} terms")]
    SeriesDivergent { z: f64, n_terms: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("epsilon search exhausted at radius {radius} without decay or divergence")]
    SearchExhausted { radius: f64 },

    #[error("cannot bracket target epsilon {target}: reachable range is [{low}, {high}]")]
    BracketFailure { target: f64, low: f64, high: f64 },

    #[error("mean absolute deviation is undefined for alpha = {alpha} (requires alpha > 1)")]
    UndefinedMoment { alpha: f64 },

    #[error("strict stability requires zero location, got mu = {0}")]
    NonZeroLocation(f64),

    #[error("unsupported norm order {0}")]
    UnsupportedNorm(f64),

    #[error("missing field `{0}`")]
    MissingField(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("row {row}: {message}")]
    Ingestion { row: usize, message: String },
}
