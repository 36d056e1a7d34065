use thiserror::Error;

/// Errors raised by the lattice, spectral, dynamics and observable layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lattice configuration: `{field}` {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failed to converge")]
    EigenSolver,

    #[error(
        "eigenvector matrix is near defective (condition {condition:.3e} exceeds {ceiling:.3e})"
    )]
    NearDefective { condition: f64, ceiling: f64 },

    #[error("no edge state: smallest |E| pair reaches {min_abs_e:.3e}, threshold {threshold:.3e}")]
    NoEdgeState { min_abs_e: f64, threshold: f64 },

    #[error("propagator step dt = {dt} rejected: series bound not met after {halvings} halvings")]
    StepRejected { dt: f64, halvings: u32 },

    #[error("invalid time grid: {0}")]
    InvalidTimes(String),

    #[error("invalid parameter grid: {0}")]
    InvalidGrid(String),

    #[error("invalid bipartite split {split} for dimension {dim}")]
    InvalidSplit { split: usize, dim: usize },

    #[error("time {0} is not a sample of the trajectory")]
    MissingSample(f64),

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("empty sweep")]
    EmptySweep,

    #[error("quench configurations differ in `{0}`")]
    QuenchMismatch(&'static str),

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
