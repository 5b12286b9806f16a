use thiserror::Error;

/// Errors raised while building spaces, operators and trajectories.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator factor {found} does not match factor {expected} at slot {slot}")]
    FactorMismatch {
        slot: usize,
        expected: String,
        found: String,
    },

    #[error("operands live on different spaces: {0}")]
    SpaceMismatch(String),

    #[error("space has the wrong shape: expected {expected}, found {found}")]
    SpaceShape { expected: String, found: String },

    #[error(
        "Fock truncation too small: tail weight {tail:.3e} exceeds {tolerance:.0e}; need n_max >= {required_n_max}"
    )]
    Truncation {
        tail: f64,
        tolerance: f64,
        required_n_max: usize,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid spin pattern: {0}")]
    InvalidPattern(String),

    #[error("operator is not hermitian (max |M - M^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("expectation value has imaginary part {imag:.3e}")]
    NonRealExpectation { imag: f64 },

    #[error("invalid factor subset {0:?}")]
    InvalidSubset(Vec<usize>),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("sectors do not partition the space: {0}")]
    NotAPartition(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("eigendecomposition did not converge for a block of size {0}")]
    EigenFailed(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
