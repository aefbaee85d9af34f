use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PcgError>;

#[derive(Debug, Error)]
pub enum PcgError {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("no cardiac cycles: {0}")]
    NoCycles(String),

    #[error("training setup: {0}")]
    TrainingSetup(String),

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("pipeline: {0}")]
    Pipeline(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("unsupported model file version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("corpus load failed:\n{}", .0.join("\n"))]
    Load(Vec<String>),

    #[error("relabel: {0}")]
    Relabel(String),

    #[error("recipe: {0}")]
    Recipe(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl PcgError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PcgError::Io {
            path: path.into(),
            source,
        }
    }
}
