use std::fmt;

/// Exit codes of the binary.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, flags or input files.
    Validation(String),
    /// A library call failed during the named stage.
    Stage { stage: String, source: ikegmres::Error },
    /// Writing outputs failed.
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => EXIT_VALIDATION,
            Self::Stage { source, .. } if source.is_validation() => EXIT_VALIDATION,
            Self::Stage { source: ikegmres::Error::Io(_) | ikegmres::Error::Json(_), .. } => EXIT_VALIDATION,
            Self::Stage { .. } => EXIT_NUMERICAL,
            Self::Io(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(msg) => write!(f, "invalid input: {msg}"),
            Self::Stage { stage, source } => write!(f, "{stage} failed: {source}"),
            Self::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

/// Attaches a stage name to library errors.
pub trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for ikegmres::Result<T> {
    fn stage(self, stage: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage: stage.to_string(), source })
    }
}
