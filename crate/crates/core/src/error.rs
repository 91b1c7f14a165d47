use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MableError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid degree vector: {0}")]
    InvalidDegrees(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("invalid support box: {0}")]
    InvalidSupport(String),

    #[error("point {point:?} lies outside the support box")]
    OutsideSupport { point: Vec<f64> },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("observation {index} has zero mixture density under the current coefficients")]
    ZeroDensity { index: usize },

    #[error("truth density is not positive ({value}) at quadrature node {node:?}")]
    NonPositiveTruth { node: Vec<f64>, value: f64 },

    #[error("row {row} lies outside the support box in dimension {dim}")]
    RowOutsideBox { row: usize, dim: usize },

    #[error("degree selection failed in dimension {dim}: {reason}")]
    Selection { dim: usize, reason: String },

    #[error("fit failed for candidate degree {degree}: {source}")]
    Candidate {
        degree: usize,
        #[source]
        source: Box<MableError>,
    },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("study aborted: {failed} of {runs} runs failed")]
    StudyAborted { failed: usize, runs: usize },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, MableError>;
