use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("operation not supported for a general (non-exchangeable) objective")]
    UnsupportedObjective,

    #[error("hypothesis index {index} out of range for K = {k}")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("threshold t_{0} missing")]
    MissingThreshold(usize),

    #[error("calibration infeasible: order statistic {rank} exceeds B = {b}; increase B or alpha")]
    CalibrationInfeasible { rank: usize, b: usize },

    #[error("calibration needs B >= {min}, got {b}")]
    TooFewSamples { b: usize, min: usize },

    #[error("alpha must lie in (0, 0.5], got {0}")]
    InvalidAlpha(f64),

    #[error("threshold table was calibrated for a different objective or alpha")]
    FingerprintMismatch,

    #[error("expected {expected} p-values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("local test suite must be symmetric and monotone")]
    UnsupportedSuite,

    #[error("K = {k} exceeds the supported maximum of {max}")]
    TooLarge { k: usize, max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("exact integration requires piecewise-constant densities")]
    NonPiecewise,

    #[error("ragged dataset: family {index} has {got} p-values, expected {expected}")]
    Ragged {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("malformed threshold table: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
