use thiserror::Error;

/// Exit status for each failure class.
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: longmem::Error,
    },
    #[error(transparent)]
    Core(#[from] longmem::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stage { source, .. } | CliError::Core(source) => match source {
                longmem::Error::Degenerate(_) => EXIT_NUMERICAL,
                longmem::Error::Config(_) => EXIT_CONFIG,
                longmem::Error::InvalidInput(_)
                | longmem::Error::Parse { .. }
                | longmem::Error::Io(_) => EXIT_INPUT,
            },
            CliError::Io { .. } | CliError::Json { .. } => EXIT_INPUT,
            CliError::Usage(_) => EXIT_CONFIG,
        }
    }

    pub(crate) fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }
}

/// Tags a library error with the pipeline stage that produced it.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for longmem::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
