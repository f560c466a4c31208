use thiserror::Error;

use crate::mle::FitResult;
use crate::pauli::PauliString;

pub type Result<T, E = TomoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TomoError {
    #[error("matrix is not Hermitian (max |m - m^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("trace {trace} deviates from 1")]
    NotNormalized { trace: f64 },

    #[error("state is not physical (min eigenvalue {min_eigenvalue:e}, trace {trace})")]
    NotPhysicalState { min_eigenvalue: f64, trace: f64 },

    #[error("identity coefficient is missing")]
    MissingIdentityCoefficient,

    #[error("expectation set is incomplete, missing {} strings: {}", .missing.len(), format_labels(.missing))]
    IncompleteSet { missing: Vec<PauliString> },

    #[error("invalid expectation record for {label}: {reason}")]
    InvalidRecord { label: String, reason: String },

    #[error("parameter vector is identically zero")]
    ZeroParameters,

    #[error("pivot {index} has magnitude {magnitude:e} after regularization")]
    SingularPivot { index: usize, magnitude: f64 },

    #[error("record {label} has non-positive sigma {sigma}")]
    ZeroSigma { label: String, sigma: f64 },

    #[error("optimizer stopped after {} iterations with gradient norm {gradient_norm:e}", .result.iterations)]
    DidNotConverge {
        result: Box<FitResult>,
        gradient_norm: f64,
    },

    #[error("matrix has zero Hilbert-Schmidt norm")]
    ZeroNorm,

    #[error("operation requires a {expected}-qubit state, got {found} qubits")]
    UnsupportedDimension { expected: usize, found: usize },

    #[error("invalid Pauli label {0:?}")]
    InvalidPauliLabel(String),

    #[error("unknown state {0:?}")]
    UnknownState(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_labels(labels: &[PauliString]) -> String {
    const SHOWN: usize = 8;
    let mut out: Vec<String> = labels.iter().take(SHOWN).map(|p| p.to_string()).collect();
    if labels.len() > SHOWN {
        out.push("...".to_string());
    }
    out.join(", ")
}
