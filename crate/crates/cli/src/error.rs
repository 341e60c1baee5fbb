use dnls_core::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("config file {path}: {source}")]
    ConfigParse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("blow-up at t={t}")]
    BlowUp { t: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Process exit status of a failed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitCode(pub u8);

impl ExitCode {
    pub const OK: Self = Self(0);
    pub const IO: Self = Self(1);
    pub const CONFIG: Self = Self(2);
    pub const BLOW_UP: Self = Self(3);
    pub const SOLVER: Self = Self(4);
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::ConfigParse { .. } => ExitCode::CONFIG,
            CliError::BlowUp { .. } => ExitCode::BLOW_UP,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => ExitCode::IO,
            CliError::Lab(e) => match e {
                LabError::Param(_)
                | LabError::Grid(_)
                | LabError::GridMismatch
                | LabError::Truncation(_)
                | LabError::TimeStep { .. }
                | LabError::Separation(_)
                | LabError::Invalid(_) => ExitCode::CONFIG,
                LabError::BlowUp { .. } => ExitCode::BLOW_UP,
                LabError::Resolution(_)
                | LabError::Eigen(_)
                | LabError::NearSpectrum { .. }
                | LabError::Resonance(_)
                | LabError::NoUnstableMode
                | LabError::BranchCut(_)
                | LabError::Fit(_) => ExitCode::SOLVER,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
