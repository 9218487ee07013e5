use thiserror::Error;

/// Every failure the simulator can report.
///
/// Run-level failures carry a stable [`FeneError::reason_code`] so that the
/// CLI can emit a machine-readable exit reason.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeneError {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0} vs {1} points per axis")]
    GridMismatch(usize, usize),

    #[error("positivity lost: min r = {min_r:e} at t = {time}")]
    PositivityLoss { min_r: f64, time: f64 },

    #[error("CFL violation: dt = {dt:e} exceeds bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("stability violation: dt = {dt:e} exceeds bound {bound:e}")]
    StabilityViolation { dt: f64, bound: f64 },

    #[error("blow-up indicator {value:e} exceeded ceiling {ceiling:e} at t = {time}")]
    BlowUp { value: f64, ceiling: f64, time: f64 },

    #[error("maximum-principle envelope violated at t = {time}: r in [{min_r}, {max_r}], envelope [{lower}, {upper}]")]
    EnvelopeViolation {
        time: f64,
        min_r: f64,
        max_r: f64,
        lower: f64,
        upper: f64,
    },

    #[error("eigen-solver failure: {0}")]
    EigenSolver(String),

    #[error("fixed-point iteration {iteration}: {source}")]
    FixedPoint {
        iteration: usize,
        source: Box<FeneError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint version error: {0}")]
    Version(String),

    #[error("truncated checkpoint: {0}")]
    Truncated(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("empty trajectory")]
    EmptyTrajectory,
}

impl FeneError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        FeneError::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// Stable identifier used in exit reports and manifests.
    pub fn reason_code(&self) -> &'static str {
        match self {
            FeneError::Domain { .. } => "domain_error",
            FeneError::InvalidParameter(_) => "invalid_parameter",
            FeneError::SizeMismatch { .. } => "size_mismatch",
            FeneError::GridMismatch(..) => "grid_mismatch",
            FeneError::PositivityLoss { .. } => "positivity_loss",
            FeneError::CflViolation { .. } => "cfl_violation",
            FeneError::StabilityViolation { .. } => "stability_violation",
            FeneError::BlowUp { .. } => "blowup_ceiling",
            FeneError::EnvelopeViolation { .. } => "envelope_violation",
            FeneError::EigenSolver(_) => "eigen_solver",
            FeneError::FixedPoint { source, .. } => source.reason_code(),
            FeneError::Config(_) => "config_error",
            FeneError::Version(_) => "version_error",
            FeneError::Truncated(_) => "truncated_checkpoint",
            FeneError::Io(_) => "io_error",
            FeneError::EmptyTrajectory => "empty_trajectory",
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            FeneError::Config(_) | FeneError::InvalidParameter(_) => 2,
            FeneError::Io(_) => 3,
            FeneError::Version(_) | FeneError::Truncated(_) => 4,
            FeneError::PositivityLoss { .. } => 10,
            FeneError::CflViolation { .. } | FeneError::StabilityViolation { .. } => 11,
            FeneError::BlowUp { .. } => 12,
            FeneError::EnvelopeViolation { .. } => 13,
            FeneError::FixedPoint { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

impl From<std::io::Error> for FeneError {
    fn from(e: std::io::Error) -> Self {
        FeneError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FeneError>;
