use thiserror::Error;

/// Errors raised by the numerical pipeline and the configuration layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("overflow evaluating {0}")]
    Overflow(String),

    #[error("{what} did not converge (last step {residual:e})")]
    NoConvergence { what: String, residual: f64 },

    #[error("grid of {requested} points exceeds the configured maximum of {max}")]
    GridTooLarge { requested: usize, max: usize },

    #[error("negative ringing clamped {mass:e} of probability mass (limit {limit:e})")]
    ClampedMass { mass: f64, limit: f64 },

    #[error("Fock expansion needs more than {cap} levels to reach the tail bound")]
    TruncationCap { cap: usize },

    #[error("oracle calibration failed: {0}")]
    Calibration(String),

    #[error("config line {line}, field `{field}`: {message}")]
    Config {
        line: usize,
        field: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// `true` for errors caused by the user's configuration rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidInput(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
