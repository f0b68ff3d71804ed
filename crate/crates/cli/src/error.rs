use thiserror::Error;
use ulma_core::harf::HarfError;
use ulma_core::model::ModelError;
use ulma_core::reward::RewardError;
use ulma_core::segmentation::SegmentationError;
use ulma_core::signal::SignalError;
use ulma_core::units::UnitsError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("manifest line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("manifest line {0}: missing \"path\"")]
    MissingPath(usize),
    #[error("{path}: expected format version {expected}, found {found}")]
    VersionMismatch { path: String, expected: u32, found: String },
    #[error("{path}: {reason}")]
    BadArtifact { path: String, reason: String },
    #[error("{0}")]
    InvalidInput(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Clip {
        path: String,
        #[source]
        source: SignalError,
    },
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Harf(#[from] HarfError),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

impl CliError {
    /// Stable identifier printed with every fatal error.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::MalformedLine { .. } => "MalformedLine",
            CliError::MissingPath(_) => "MissingPath",
            CliError::VersionMismatch { .. } => "VersionMismatch",
            CliError::BadArtifact { .. } => "BadArtifact",
            CliError::InvalidInput(_) => "InvalidInput",
            CliError::Io { .. } => "Io",
            CliError::Clip { .. } => "Clip",
            CliError::Segmentation(_) => "Segmentation",
            CliError::Harf(_) => "Harf",
            CliError::Units(_) => "Units",
            CliError::Model(_) => "Model",
            CliError::Reward(_) => "Reward",
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

/// Variant name of a segmentation failure, as recorded in analysis reports.
pub fn segmentation_code(e: &SegmentationError) -> &'static str {
    match e {
        SegmentationError::InvalidLevels => "InvalidLevels",
        SegmentationError::EmptySignal => "EmptySignal",
        SegmentationError::NoIsmFound => "NoIsmFound",
        SegmentationError::InvalidThresholds => "InvalidThresholds",
        SegmentationError::InvalidDuration => "InvalidDuration",
        SegmentationError::MissingClass(_) => "MissingClass",
        SegmentationError::Signal(e) => signal_code(e),
    }
}

pub fn signal_code(e: &SignalError) -> &'static str {
    match e {
        SignalError::UnsupportedFormat(_) => "UnsupportedFormat",
        SignalError::CorruptHeader(_) => "CorruptHeader",
        SignalError::EmptyAudio => "EmptyAudio",
        SignalError::SampleOutOfRange { .. } => "SampleOutOfRange",
        SignalError::UnsupportedRate(_) => "UnsupportedRate",
        SignalError::ClipTooShort { .. } => "ClipTooShort",
        SignalError::InvalidConfig(_) => "InvalidConfig",
        SignalError::Io(_) => "Io",
    }
}
