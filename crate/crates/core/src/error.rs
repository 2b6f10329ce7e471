use thiserror::Error;

use crate::heuristics::AssumptionReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("evaluation point {s} is numerically a pole (condition estimate {cond:.3e})")]
    NearPole { s: num_complex::Complex64, cond: f64 },

    #[error("mass matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularMass { cond: f64 },

    #[error("rank-one update denominator vanishes: |1 + v^T X^-1 u| = {magnitude:.3e}")]
    SingularDenominator { magnitude: f64 },

    #[error("barycentric denominator vanishes at {s}: |den| = {magnitude:.3e}")]
    ZeroDenominator { s: num_complex::Complex64, magnitude: f64 },

    #[error("degenerate divided-difference kernel at row {row} (mu), column {col} (lambda): {reason}")]
    DegenerateKernel { row: usize, col: usize, reason: String },

    #[error("divided-difference matrix is numerically singular (smallest pivot {pivot:.3e}, norm {norm:.3e})")]
    SingularLoewner { pivot: f64, norm: f64 },

    #[error("interpolation point lambda[{index}] is zero; the D-constrained form needs nonzero points")]
    ZeroInterpolationPoint { index: usize },

    #[error("assumption check failed:\n{0}")]
    AssumptionViolation(AssumptionReport),

    #[error("invalid interpolation data: {0}")]
    InvalidData(String),

    #[error("invalid barycentric form: {0}")]
    InvalidForm(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("support strategy does not fit the data: {0}")]
    StrategyMismatch(String),

    #[error("point {point} has no conjugate partner in its set")]
    NotConjugationClosed { point: num_complex::Complex64 },

    #[error("realified model keeps imaginary residue {residue:.3e} (bound {bound:.3e}) in {part}")]
    ResidualImaginary { part: &'static str, residue: f64, bound: f64 },

    #[error("reference sample {index} is zero; relative error undefined")]
    ZeroReference { index: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: frequency is not strictly increasing")]
    NonMonotoneFrequency { line: usize },

    #[error("unsupported model file schema {found:?} (expected {expected})")]
    SchemaMismatch { found: String, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line interface.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AssumptionViolation(_)
            | Error::ZeroInterpolationPoint { .. }
            | Error::DegenerateKernel { .. }
            | Error::StrategyMismatch(_)
            | Error::NotConjugationClosed { .. }
            | Error::ResidualImaginary { .. }
            | Error::InvalidData(_)
            | Error::InvalidForm(_) => 2,
            Error::SingularLoewner { .. } | Error::SingularMass { .. } => 3,
            _ => 1,
        }
    }
}
