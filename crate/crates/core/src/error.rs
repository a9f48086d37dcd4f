use thiserror::Error;

use crate::frames::FrameSystem;
use crate::inverse::InvalidReason;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: asymmetry {deviation:.3e} exceeds {threshold:.3e}")]
    NotHermitian { deviation: f64, threshold: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Hermitian eigensolver did not converge")]
    ConvergenceFailure,

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.6e} below {threshold:.6e}")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error("direction is not a unit vector: norm {norm:.15}")]
    NotUnitVector { norm: f64 },

    #[error("direction source exhausted at step {step} before any stop rule fired")]
    EmptyDirectionSource { step: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("operator is numerically zero (norm {opnorm:.3e})")]
    ZeroOperator { opnorm: f64 },

    #[error("no pool candidate satisfies <u,Ru> >= c*||R|| with c = {c}; best ratio {best_ratio:.6}")]
    NoCandidateSatisfiesC { c: f64, best_ratio: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("chain not exhausted: Parseval defect {defect:.3e}")]
    NotExhausted { defect: f64, frame: Box<FrameSystem> },

    #[error("inconsistent chain at step {step}: ||R_(n+1) - (R_n - E_n E_n*)|| = {defect:.3e}")]
    InconsistentChain { step: usize, defect: f64 },

    #[error("invalid chain at step {step}: {reason}")]
    InvalidChain { step: usize, reason: InvalidReason },

    #[error("invalid kernel parameters: {0}")]
    InvalidKernelParams(String),

    #[error("kernel schedule is empty")]
    EmptySchedule,

    #[error("malformed input: {0}")]
    Format(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
