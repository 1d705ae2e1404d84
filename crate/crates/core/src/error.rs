use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Every variant maps to a stable machine-readable code via [`Error::code`],
/// which the CLI writes into its error report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown curve family `{0}`")]
    UnknownFamily(String),
    #[error("grid size {0} must be a power of two in [64, 65536]")]
    InvalidGridSize(usize),
    #[error("raw_samples carries {got} points, expected {expected}")]
    SampleCountMismatch { expected: usize, got: usize },
    #[error("invalid curve spec: {0}")]
    InvalidSpec(String),
    #[error("sample {index} is numerically zero")]
    ZeroSample { index: usize },
    #[error("det(g'', g', g) changes sign (inflection point): min {min:e}, max {max:e}")]
    MixedSign { min: f64, max: f64 },
    #[error("curvature determinant nearly degenerate: min |det| {min_abs:e}, max |det| {max_abs:e}")]
    NearDegenerate { min_abs: f64, max_abs: f64 },
    #[error("reparametrization is not increasing at node {index} (ds/dt = {value:e})")]
    NonMonotone { index: usize, value: f64 },
    #[error("nodal system at node {index} has condition number {condition:e}")]
    IllConditioned { index: usize, condition: f64 },
    #[error("gauge violated: max |c2| = {residual:e}")]
    GaugeViolation { residual: f64 },
    #[error("frame does not close up: defect {defect:e}")]
    ClosureDefect { defect: f64 },
    #[error("frame invariant `{quantity}` violated: {value:e}")]
    FrameDefect { quantity: &'static str, value: f64 },
    #[error("duality contract `{quantity}` violated: {value:e}")]
    DualityViolation { quantity: &'static str, value: f64 },
    #[error("pairing is negative at node {index}: {value:e}")]
    NegativePairing { index: usize, value: f64 },
    #[error("integrator failed at t = {t} (step {h:e})")]
    StepFailure { t: f64, h: f64 },
    #[error("monodromy with trace {trace} is excluded for convex cones: {reason}")]
    TheoremViolation { trace: f64, reason: String },
    #[error("reduced solution leaves its region at node {index} by {excess:e}")]
    OrthantViolation { index: usize, excess: f64 },
    #[error("could not invert the reparametrization at s = {s}")]
    InversionFailure { s: f64 },
    #[error("samples do not lie on a quadric cone: singular value ratio {ratio:e}")]
    NotAQuadric { ratio: f64 },
    #[error("quadratic form has signature ({positive}, {negative}), expected Lorentzian")]
    WrongSignature { positive: usize, negative: usize },
    #[error("balanced lift fails re-extraction: alpha deviates by {deviation:e}")]
    VerificationFailure { deviation: f64 },
    #[error("cubic form is flat (max |beta| = {max_abs:e}); sextactic points undefined")]
    FlatBeta { max_abs: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownFamily(_) => "UnknownFamily",
            Error::InvalidGridSize(_) => "InvalidGridSize",
            Error::SampleCountMismatch { .. } => "SampleCountMismatch",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::ZeroSample { .. } => "ZeroSample",
            Error::MixedSign { .. } => "MixedSign",
            Error::NearDegenerate { .. } => "NearDegenerate",
            Error::NonMonotone { .. } => "NonMonotone",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::GaugeViolation { .. } => "GaugeViolation",
            Error::ClosureDefect { .. } => "ClosureDefect",
            Error::FrameDefect { .. } => "FrameDefect",
            Error::DualityViolation { .. } => "DualityViolation",
            Error::NegativePairing { .. } => "NegativePairing",
            Error::StepFailure { .. } => "StepFailure",
            Error::TheoremViolation { .. } => "TheoremViolation",
            Error::OrthantViolation { .. } => "OrthantViolation",
            Error::InversionFailure { .. } => "InversionFailure",
            Error::NotAQuadric { .. } => "NotAQuadric",
            Error::WrongSignature { .. } => "WrongSignature",
            Error::VerificationFailure { .. } => "VerificationFailure",
            Error::FlatBeta { .. } => "FlatBeta",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
