use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The adaptive step size collapsed below its floor.
    #[error("integration failure at t = {t:e} s: step size underflow")]
    IntegrationFailure { t: f64 },

    /// The density matrix trace drifted beyond the accuracy bound.
    #[error("accuracy failure at t = {t:e} s: trace residual {residual:e}")]
    AccuracyFailure { t: f64, residual: f64 },

    #[error("calibration failure: {0}")]
    CalibrationFailure(String),

    #[error("degenerate ratio: {0}")]
    DegenerateRatio(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
