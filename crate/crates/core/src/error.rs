use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical conditioning: {0}")]
    Conditioning(String),
    #[error("assumption ({assumption}) violated: {detail}")]
    Validation { assumption: String, detail: String },
    #[error("hyperbolicity lost: {0}")]
    Hyperbolicity(String),
    #[error("lambda = {lambda} is not below the essential spectrum edge kappa = {kappa}")]
    EssentialSpectrum { lambda: f64, kappa: f64 },
    #[error("inadmissible spectral interval: {0}")]
    Admissibility(String),
    #[error("integration accuracy: {0}")]
    IntegrationAccuracy(String),
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("tracking: {0}")]
    Tracking(String),
    #[error("degenerate crossing near parameter {param}: angular velocity unresolved, refine the path")]
    DegenerateCrossing { param: f64 },
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("monotonicity violation: {0}")]
    Monotonicity(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("oracle unconverged: count {coarse} at (L, N) but {fine} after refinement")]
    OracleUnconverged { coarse: usize, fine: usize },
    #[error("input: {0}")]
    Input(String),
}

impl Error {
    /// Short machine-readable code used in CLI reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::Conditioning(_) => "conditioning",
            Error::Validation { .. } => "validation",
            Error::Hyperbolicity(_) => "hyperbolicity",
            Error::EssentialSpectrum { .. } => "essential_spectrum",
            Error::Admissibility(_) => "admissibility",
            Error::IntegrationAccuracy(_) => "integration_accuracy",
            Error::Truncation(_) => "truncation",
            Error::Tracking(_) => "tracking",
            Error::DegenerateCrossing { .. } => "degenerate_crossing",
            Error::Consistency(_) => "consistency",
            Error::Monotonicity(_) => "monotonicity",
            Error::Unsupported(_) => "unsupported",
            Error::OracleUnconverged { .. } => "oracle_unconverged",
            Error::Input(_) => "input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
