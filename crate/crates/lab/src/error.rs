use std::path::PathBuf;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: cqed_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("validation failed: {0}")]
    Validation(String),
}

impl LabError {
    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    /// Process exit code: 2 configuration, 3 integration, 4 calibration,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use cqed_core::Error as E;
        match self {
            LabError::Config(_) => 2,
            LabError::Core { source, .. } => match source {
                E::InvalidArgument(_) => 2,
                E::IntegrationFailure { .. } | E::AccuracyFailure { .. } => 3,
                E::CalibrationFailure(_) => 4,
                E::DegenerateRatio(_) | E::DegenerateFit(_) => 1,
            },
            LabError::Validation(_) => 3,
            LabError::Io { .. } => 1,
        }
    }
}

/// Attaches the module of origin to core errors.
pub(crate) trait Context<T> {
    fn context(self, context: &'static str) -> Result<T>;
}

impl<T> Context<T> for cqed_core::Result<T> {
    fn context(self, context: &'static str) -> Result<T> {
        self.map_err(|source| LabError::Core { context, source })
    }
}
