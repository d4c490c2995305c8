use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("time {t} is not a grid point")]
    OffGrid { t: f64 },
    #[error("grid index {index} out of range (steps = {steps})")]
    IndexOutOfRange { index: usize, steps: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("driver must start at zero, got u_0 = {0}")]
    NonZeroStart(f64),
    #[error("invalid driver spec: {0}")]
    InvalidSpec(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("partitions are not nested between levels {coarse} and {fine}")]
    NotNested { coarse: usize, fine: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("kappa must be < 2 (got {0})")]
    KappaTooLarge(f64),
    #[error("kappa must be > 0 (got {0})")]
    KappaNonPositive(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trace has {0} unconverged points")]
    UnconvergedTrace(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
