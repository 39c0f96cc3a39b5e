use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector is not in V: {0}")]
    NotInV(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("order {order} out of range 1..={max}")]
    OrderOutOfRange { order: usize, max: usize },

    #[error("rank {rank} out of range for C({n},{p}) = {count}")]
    RankOutOfRange { rank: usize, n: usize, p: usize, count: usize },

    #[error("compound of a {dim}-dimensional matrix exceeds the cap of {cap}; use the uncapped constructor")]
    TooLarge { dim: usize, cap: usize },

    #[error("diagonal scaling requires positive entries, got {0}")]
    NonpositiveScale(f64),

    #[error("parameter must be positive, got {0}")]
    NonpositiveParameter(f64),

    #[error("matrix is singular to tolerance (|det| = {det:e}, threshold {threshold:e})")]
    SingularMatrix { det: f64, threshold: f64 },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("step {step} larger than horizon {horizon}")]
    StepTooLarge { step: f64, horizon: f64 },

    #[error("initial condition must be nonzero")]
    ZeroInitialCondition,

    #[error("generator is not Metzler at t = {t}: entry ({row},{col}) = {value}")]
    NotMetzler { t: f64, row: usize, col: usize, value: f64 },

    #[error("state leaves the unit cube: entry {index} = {value}")]
    OutOfUnitCube { index: usize, value: f64 },

    #[error("inadmissible initial state: {0}")]
    InadmissibleState(String),

    #[error("numerical abort: {0}")]
    NumericalAbort(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
