use thiserror::Error;

/// Failure modes shared by every analysis stage.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DflabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("constraints violated: {}", .0.join("; "))]
    ConstraintViolation(Vec<String>),
    #[error("profile evaluated outside its domain: {0}")]
    DomainError(String),
    #[error("point lies outside the trusted collar (estimate {estimate:.3e}, halfwidth {halfwidth:.3e})")]
    OutsideCollar { estimate: f64, halfwidth: f64 },
    #[error("projection failed to converge: {0}")]
    ProjectionDiverged(String),
    #[error("defining function gradient degenerates (|grad| = {0:.3e})")]
    DegenerateGradient(f64),
    #[error("transport matrix is near singular (condition {0:.3e})")]
    SingularTransport(f64),
    #[error("vector is not complex tangent (residual {0:.3e})")]
    NotTangent(f64),
    #[error("normal derivative in w is degenerate (|d_w| = {0:.3e})")]
    DegenerateNormal(f64),
    #[error("weak set is irregular: {0}")]
    IrregularConfiguration(String),
    #[error("classification is not regular")]
    IrregularWeakSet,
    #[error("component is not annulus-like")]
    NotAnnulus,
    #[error("oscillation window too wide: {window:.6} >= pi")]
    WindowTooWide { window: f64 },
    #[error("candidate weight is not positive at t = {0}")]
    NonPositive(f64),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("no feasible exponent at the lower bracket edge {0}")]
    NoBracket(f64),
    #[error("independent evaluations disagree: {0}")]
    NumericMismatch(String),
    #[error("invalid grid: {0}")]
    GridInvalid(String),
    #[error("io: {0}")]
    Io(String),
}

impl DflabError {
    /// Process exit code: 1 configuration, 2 numerical failure, 3 hypothesis.
    pub fn exit_code(&self) -> i32 {
        match self {
            DflabError::Config(_) | DflabError::ConstraintViolation(_) | DflabError::Io(_) => 1,
            DflabError::HypothesisViolation(_)
            | DflabError::IrregularConfiguration(_)
            | DflabError::IrregularWeakSet
            | DflabError::NotAnnulus => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for DflabError {
    fn from(e: std::io::Error) -> Self {
        DflabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DflabError>;
