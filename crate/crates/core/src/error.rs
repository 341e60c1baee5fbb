use thiserror::Error;

/// Why a parameter point is not admissible.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("non-finite parameter `{0}`")]
    NonFinite(&'static str),
    #[error("omega must be positive, got {0}")]
    NonPositiveOmega(f64),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("speed c={c} violates {rule} (admissible range {lower} .. {upper})")]
    SpeedOutOfRange {
        c: f64,
        lower: f64,
        upper: f64,
        rule: &'static str,
    },
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("shift {mu} too close to the spectrum (condition estimate {cond:.3e})")]
    NearSpectrum { mu: num_complex::Complex64, cond: f64 },
    #[error("resonant parameter point: {0}")]
    Resonance(String),
    #[error("no unstable eigenvalue at this parameter point")]
    NoUnstableMode,
    #[error("kernel parameter {0} lies on the branch cut [0, inf)")]
    BranchCut(num_complex::Complex64),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("time step {dt} exceeds the stability bound {bound}")]
    TimeStep { dt: f64, bound: f64 },
    #[error("solution blew up at t={t}")]
    BlowUp { t: f64 },
    #[error("solitons too close: {0}")]
    Separation(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
