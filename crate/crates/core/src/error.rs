use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e}, allowed {allowed:.3e})")]
    NonHermitianInput { asymmetry: f64, allowed: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symplectic (max deviation {deviation:.3e})")]
    NotSymplectic { deviation: f64 },

    #[error(
        "interaction does not preserve the commutator between outputs {row} and {col} (deviation {deviation:.3e})"
    )]
    CommutatorNotPreserved { row: usize, col: usize, deviation: f64 },

    #[error("output observables {first} and {second} do not commute (commutator {value:.3e})")]
    OutputsDoNotCommute { first: String, second: String, value: f64 },

    #[error("state is not representable on the grid: {0}")]
    UnrepresentableOnGrid(String),

    #[error("covariance is not that of a pure state: {0}")]
    UnphysicalCovariance(String),

    #[error("smallest singular value did not converge under refinement ({coarse:.3e} -> {fine:.3e})")]
    GridTooCoarse { coarse: f64, fine: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
