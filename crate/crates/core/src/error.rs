use thiserror::Error;

/// Errors raised across the stabilization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KsError {
    #[error("parameter rejected: {0}")]
    InvalidParameters(String),

    #[error("degenerate characteristic roots for mode {j}: {reason}")]
    DegenerateRoots { j: usize, reason: String },

    #[error("numerical overflow while evaluating {0}")]
    NumericalOverflow(String),

    #[error("coefficient system is singular: {0}")]
    SingularSystem(String),

    #[error("closed-form kernel rows unavailable: {0}")]
    ClosedFormUnavailable(String),

    #[error("test function violates boundary constraint {constraint} (defect {defect:e})")]
    InvalidTestFunction { constraint: String, defect: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("I - K is near singular (condition estimate {0:e})")]
    NearSingular(f64),

    #[error("implicit solve rejected: residual {residual:e} exceeds {limit:e}")]
    StepRejected { residual: f64, limit: f64 },

    #[error("step diverged at t = {time}: norm grew from {before:e} to {after:e}")]
    DivergedStep { time: f64, before: f64, after: f64 },

    #[error("boundary profile degenerate: |sin(sqrt(lambda))| = {0:e}")]
    DegenerateBoundaryProfile(f64),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl KsError {
    /// Short machine-readable category used by the command line runner.
    pub fn category(&self) -> &'static str {
        match self {
            KsError::InvalidParameters(_) => "parameter_rejection",
            KsError::DegenerateRoots { .. } => "parameter_rejection",
            KsError::DegenerateBoundaryProfile(_) => "parameter_rejection",
            KsError::InvalidTestFunction { .. } => "parameter_rejection",
            KsError::DimensionMismatch { .. } => "numerical_failure",
            KsError::NumericalOverflow(_)
            | KsError::SingularSystem(_)
            | KsError::ClosedFormUnavailable(_)
            | KsError::NearSingular(_)
            | KsError::StepRejected { .. }
            | KsError::DivergedStep { .. } => "numerical_failure",
            KsError::Schema(_) => "schema_error",
            KsError::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for KsError {
    fn from(e: std::io::Error) -> Self {
        KsError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for KsError {
    fn from(e: serde_json::Error) -> Self {
        KsError::Schema(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, KsError>;
