use thiserror::Error;

/// Errors raised by state construction, evolution and measurement routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation dimension {0} is below the minimum of 2")]
    Dimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Bogoliubov transform undefined: requires delta > r >= 0 (delta = {delta}, r = {r})")]
    BogoliubovDomain { delta: f64, r: f64 },

    #[error("truncation too small ({context}): population {population:.3e} exceeds tolerance {tolerance:.1e}")]
    Truncation {
        population: f64,
        tolerance: f64,
        context: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero-probability outcome: {0}")]
    ZeroProbability(String),

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("grid inadequate: {0}")]
    Grid(String),

    #[error("operator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
