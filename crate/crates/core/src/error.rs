use thiserror::Error;

/// Everything that can go wrong inside the simulator.
///
/// [`Error::name`] gives a stable identifier that result files embed when a
/// run aborts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:.3e}")]
    NonHermitianInput { deviation: f64 },

    #[error("eigensolver failed to converge")]
    DecompositionFailure,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("not a projector: max |P^2 - P| = {deviation:.3e}")]
    NotAProjector { deviation: f64 },

    #[error("grid under-resolved for sigma_q = {sigma_q}: need spacing <= sigma_q/4 and extent >= 16 sigma_q")]
    GridUnderResolved { sigma_q: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operation not supported by this pointer backend: {0}")]
    BackendUnsupported(String),

    #[error("translation {shift} exceeds the aliasing limit {limit}")]
    TranslationOutOfRange { shift: f64, limit: f64 },

    #[error("imaginary residual {residual:.3e} exceeds tolerance")]
    ImaginaryResidualTooLarge { residual: f64 },

    #[error("oracle state dimension {dim} exceeds the limit {limit}")]
    OracleTooLarge { dim: usize, limit: usize },

    #[error("post-selection probability {probability:.3e} is below the floor")]
    PostSelectionTooRare { probability: f64 },

    #[error("pointer preparation violates a required condition: {0}")]
    PointerConditionsViolated(String),

    #[error("extrapolation schedule is degenerate: {0}")]
    DegenerateSchedule(String),

    #[error("extrapolation fit is ill-conditioned (condition number {condition:.3e})")]
    IllConditionedFit { condition: f64 },

    #[error("phase-space flow diverged (|q| or |p| above 1e6)")]
    FlowDivergence,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonHermitianInput { .. } => "NonHermitianInput",
            Error::DecompositionFailure => "DecompositionFailure",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidDensityMatrix(_) => "InvalidDensityMatrix",
            Error::NotAProjector { .. } => "NotAProjector",
            Error::GridUnderResolved { .. } => "GridUnderResolved",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::BackendUnsupported(_) => "BackendUnsupported",
            Error::TranslationOutOfRange { .. } => "TranslationOutOfRange",
            Error::ImaginaryResidualTooLarge { .. } => "ImaginaryResidualTooLarge",
            Error::OracleTooLarge { .. } => "OracleTooLarge",
            Error::PostSelectionTooRare { .. } => "PostSelectionTooRare",
            Error::PointerConditionsViolated(_) => "PointerConditionsViolated",
            Error::DegenerateSchedule(_) => "DegenerateSchedule",
            Error::IllConditionedFit { .. } => "IllConditionedFit",
            Error::FlowDivergence => "FlowDivergence",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
