//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})"
    )]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error(
        "eigenvalue {value:.3e} is negative beyond tolerance; input is not positive semidefinite"
    )]
    NegativeEigenvalue { value: f64 },

    #[error("probabilities sum to {sum} instead of 1")]
    NotNormalized { sum: f64 },

    #[error("trace is {trace} instead of 1")]
    TraceNotOne { trace: f64 },

    #[error("dimension {0} is too small; need at least 2")]
    DimensionTooSmall(usize),

    #[error("epsilon {0} lies outside [0, 1]")]
    EpsilonOutOfRange(f64),

    #[error("epsilon {0} must lie strictly inside (0, 1) for the closed-form overlap")]
    EpsilonNotInterior(f64),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid realization: {0}")]
    InvalidRealization(String),

    #[error(
        "overlap O[{row},{col}] = {value:.3e} is below the anchor threshold {threshold:.1e}; \
         the isometry coefficients 1/O would blow up"
    )]
    NearZeroOverlap {
        row: usize,
        col: usize,
        value: f64,
        threshold: f64,
    },

    #[error("correlation invariant violated at setting pair ({x},{y}): {detail}")]
    CorrelationInvariant { x: usize, y: usize, detail: String },

    #[error("purification does not reduce to the realization state (residual {residual:.3e})")]
    PurificationMismatch { residual: f64 },

    #[error("invalid setting index {index} (have {available} settings)")]
    InvalidSetting { index: usize, available: usize },

    #[error("vertex count {count} exceeds the cap {cap}")]
    VertexCapExceeded { count: u128, cap: u128 },

    #[error("LP tableau would need {cells} cells, exceeding the cap {cap}")]
    LpSizeExceeded { cells: u128, cap: u128 },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid input file: {0}")]
    InvalidFile(String),

    #[error("noise probability {0} lies outside [0, 0.5]")]
    NoiseOutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
