use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("input is not Hermitian (max asymmetry {0:e})")]
    NonHermitianInput(f64),

    #[error("input is not positive semidefinite (min eigenvalue {0:e})")]
    IndefiniteInput(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid tangent: {0}")]
    InvalidTangent(String),

    #[error("tangent has weight {0:e} outside the support of the state")]
    SupportMismatch(f64),

    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("Schur complement is negative ({0:e}); blocks are inconsistent")]
    NegativeEffective(f64),

    #[error("integration step too large: {0}")]
    StepTooLarge(String),

    #[error("value out of domain: {0}")]
    DomainError(String),

    #[error("dispersive regime violated: |detuning| = {detuning} <= {threshold}")]
    DispersiveViolation { detuning: f64, threshold: f64 },

    #[error("I/O failure: {0}")]
    Io(String),

    #[error("Bloch vector on the pure-state surface with outward velocity (S.dS = {0:e})")]
    BlochBoundary(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
