use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("wavelet index {index} out of range 1..={size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("resolution level {level} exceeds the supported maximum {max}")]
    ResolutionTooHigh { level: u32, max: u32 },

    #[error("negative base {base} raised to fractional power {exponent}")]
    NegativeBaseFractionalPower { base: f64, exponent: f64 },

    #[error("coefficient t^gamma is singular at t = 0")]
    SingularPoint,

    #[error("matrix is singular: pivot {pivot:e} in column {column}")]
    SingularMatrix { pivot: f64, column: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in iterate {iteration}")]
    NonFinite { iteration: usize },

    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("step halving exhausted at iteration {iteration} (residual {residual:e})")]
    DampingExhausted { iteration: usize, residual: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("no reference value for {0}")]
    MissingCell(String),

    #[error("evaluation grid does not match the reference grid")]
    GridMismatch,

    #[error("reference data line {line}: {message}")]
    RefData { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}
