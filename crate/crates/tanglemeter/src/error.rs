//! Crate-wide error type.
//!
//! Validation errors name the violated invariant and its measured magnitude
//! so a failing state file or moment set can be diagnosed from the message
//! alone.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (got {got}, expected {expected})")]
    DimMismatch {
        context: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("matrix entry is not finite at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |m - m†| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("trace is not 1: |tr - 1| = {deviation:.3e}")]
    TraceNotOne { deviation: f64 },

    #[error("negative eigenvalue {value:.3e} below tolerance -{tolerance:.1e}")]
    NegativeEigenvalue { value: f64, tolerance: f64 },

    #[error("vector norm is not 1: |norm - 1| = {deviation:.3e}")]
    NormNotOne { deviation: f64 },

    #[error("unknown named state `{0}`")]
    UnknownState(String),

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("operator is not unitary: max |U†U - 1| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("channel weights do not sum to 1: |sum - 1| = {deviation:.3e}")]
    WeightsNotNormalized { deviation: f64 },

    #[error("eigensolver did not converge: off-diagonal norm {off:.3e} after {sweeps} sweeps")]
    NonConvergence { off: f64, sweeps: usize },

    #[error("spectrum recovery left imaginary residue {residue:.3e} above threshold {threshold:.3e}; moments are inconsistent or too noisy")]
    ImagResidue { residue: f64, threshold: f64 },

    #[error("contraction produced imaginary part {imag:.3e} on a quantity that must be real")]
    NotReal { imag: f64 },

    #[error("state is not pure enough: tr(rho^2) = {purity} < {threshold}")]
    NotPure { purity: f64, threshold: f64 },

    #[error("problem size exceeds simulator limit: {context} needs {needed} qubits, limit {limit}")]
    SizeLimit {
        context: &'static str,
        needed: usize,
        limit: usize,
    },

    #[error("invalid state file: {0}")]
    BadStateFile(String),

    #[error("fringe fit needs at least 3 distinct phase points, got {0}")]
    TooFewPhasePoints(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 invalid input, 3 numerical failure,
    /// 4 size limit.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::SizeLimit { .. } => 4,
            Error::NonConvergence { .. }
            | Error::ImagResidue { .. }
            | Error::NotReal { .. } => 3,
            _ => 2,
        }
    }
}
