use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("{name} is not positive semidefinite")]
    NotPositiveSemidefinite { name: &'static str },

    #[error("{name} is not positive definite")]
    NotPositiveDefinite { name: &'static str },

    #[error("matrix is numerically singular (pivot {pivot:.3e} below threshold {threshold:.3e})")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("shift {re}{im:+}i makes the shifted matrix singular")]
    SingularShift { re: f64, im: f64 },

    #[error("shift {re}{im:+}i does not lie in the open right half-plane")]
    InvalidShift { re: f64, im: f64 },

    #[error("empty shift list")]
    EmptyShifts,

    #[error("invalid spectral interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("iterates overflowed after {iterations} steps (norm {norm:.3e})")]
    Overflow { iterations: usize, norm: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("Cayley-transformed A_d is numerically singular")]
    SingularAd,

    #[error("structure lost in transformation: {0}")]
    StructureLoss(String),

    #[error("numerical rank {found}, expected {expected}")]
    RankMismatch { expected: usize, found: usize },

    #[error("U1 block is ill conditioned (condition estimate {condition:.3e})")]
    SingularU1 { condition: f64 },

    #[error("inner Lyapunov solve failed: {0}")]
    InnerSolveFailed(String),

    #[error("{found} eigenvalues in the requested region, expected {expected}")]
    RegionCountMismatch { expected: usize, found: usize },

    #[error("explicit matrix power would exceed the overflow guard (bound {bound:.3e})")]
    OverflowGuard { bound: f64 },

    #[error("problem size {n} exceeds oracle cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("low-rank factor C is required")]
    MissingFactor,

    #[error("solution carries no dual solution Y_plus")]
    MissingDual,

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
