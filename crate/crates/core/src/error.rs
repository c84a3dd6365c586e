use thiserror::Error;

/// Every failure the library can report.
///
/// Validation variants carry the residual that tripped the check so callers
/// can tell rounding noise from a genuine contract violation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator entries do not form a square matrix ({len} entries)")]
    NotSquare { len: usize },
    #[error("operator has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("operator is not Hermitian (max residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("operator is not idempotent (max residual {residual:.3e})")]
    NotIdempotent { residual: f64 },
    #[error("density operator trace differs from 1 by {residual:.3e}")]
    TraceNotUnit { residual: f64 },
    #[error("density operator has negative eigenvalue {value:.3e}")]
    NegativeEigenvalue { value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for length {len}")]
    BadIndex { index: usize, len: usize },
    #[error("trace has imaginary part {imag:.3e} for commuting projectors")]
    NonRealResult { imag: f64 },
    #[error("operators {first} and {second} do not commute")]
    NotCommuting { first: usize, second: usize },
    #[error("probability {value:.3e} is negative beyond rounding")]
    NegativeProbability { value: f64 },
    #[error("value {value} is outside its valid range")]
    OutOfRange { value: f64 },
    #[error("invalid probability table: {reason}")]
    InvalidTable { reason: String },
    #[error("pair ({0}, {1}) has no defined joint probability")]
    UndeclaredPair(usize, usize),
    #[error("variable has zero variance; correlation undefined")]
    ZeroVariance,
    #[error("unknown observable label {0:?}")]
    UnknownLabel(String),
    #[error("invalid hidden-variable model: {reason}")]
    InvalidModel { reason: String },
    #[error("{count} base variables exceed the limit of {limit}")]
    TooManyVariables { count: usize, limit: usize },
    #[error("feasibility is numerically ambiguous (phase-1 objective {objective:.3e})")]
    NumericallyAmbiguous { objective: f64 },
    #[error("invalid linear program: {reason}")]
    InvalidProblem { reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
