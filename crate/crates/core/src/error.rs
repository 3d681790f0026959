use thiserror::Error;

/// Errors raised by problem construction, the numerical kernels, the solvers
/// and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsvpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected {expected} target singular values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("target singular value {index} is not positive ({value})")]
    NonpositiveSigma { index: usize, value: f64 },
    #[error("target singular values {index} and {next} are closer than the minimum gap {min_gap}")]
    DuplicateSigma {
        index: usize,
        next: usize,
        min_gap: f64,
    },
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("degenerate shift vector: {0}")]
    DegenerateShift(String),
    #[error("singular linear system")]
    SingularSystem,
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("singular values {0} and {1} collided")]
    SingularValueCollision(usize, usize),
    #[error("random draw produced degenerate targets after {0} attempts")]
    DegenerateDraw(usize),
    #[error("root-rate estimate needs at least 3 residuals below 1 and above the roundoff floor, got {0}")]
    InsufficientData(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

impl From<std::io::Error> for IsvpError {
    fn from(e: std::io::Error) -> Self {
        IsvpError::IoFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, IsvpError>;
