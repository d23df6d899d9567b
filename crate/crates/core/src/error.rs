use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular (pivot {pivot} vanished)")]
    Singular { pivot: usize },

    #[error("eigensolver did not converge within {sweeps} QR sweeps")]
    Convergence { sweeps: usize },

    #[error("eigenpair {index} has backward error {residual:e} above tolerance")]
    EigenResidual { index: usize, residual: f64 },

    #[error("matrix exponential refused: norm {norm:e} exceeds the overflow guard")]
    OverflowRisk { norm: f64 },

    #[error("{lambda} lies on the spectrum (numerically)")]
    SpectrumPoint { lambda: Complex64 },

    #[error("symmetry violation: no partner found for eigenvalue {value}")]
    SymmetryViolation { value: Complex64 },

    #[error("no splitting into two parts of size {n} exists: {reason}")]
    InfeasibleSplitting { n: usize, reason: String },

    #[error("degenerate part: kappa(X1) = {kappa:e}")]
    DegeneratePart { kappa: f64 },

    #[error("solvent residual {residual:e} exceeds tolerance {bound:e}")]
    ResidualTooLarge { residual: f64, bound: f64 },

    #[error("incomplete pair: kappa(X - Z) = {kappa:e}")]
    IncompletePair { kappa: f64 },

    #[error("pair cannot be scored: {0} is not invertible")]
    UnscorablePair(&'static str),

    #[error("no admissible complete pair: {0}")]
    NoPairs(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("splitting count {count} exceeds budget {budget}")]
    Budget { count: u128, budget: u128 },

    #[error("high-precision matrix is singular")]
    HighPrecisionSingular,

    #[error("relative error undefined: reference norm is zero")]
    UndefinedRelativeError,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
