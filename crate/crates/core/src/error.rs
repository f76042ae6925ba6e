use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
///
/// Validation failures (bad inputs, malformed files, config problems) are
/// distinguished from runtime/numerical failures so the CLI can map them to
/// different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: missing grid point (phi = {phi:e} rad, b_bias = {bias:e} T)")]
    MissingGridPoint { path: PathBuf, phi: f64, bias: f64 },

    #[error("config: unknown key `{0}`")]
    UnknownKey(String),

    #[error("config: missing required key `{0}`")]
    MissingKey(String),

    #[error("config: key `{key}`: {message}")]
    UnitViolation { key: String, message: String },

    #[error("config: key `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::Io { .. })
    }

    /// Short machine-readable category tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::OutOfRegime(_) => "out-of-regime",
            Error::Parse { .. } => "parse",
            Error::MissingGridPoint { .. } => "missing-grid-point",
            Error::UnknownKey(_) => "unknown-key",
            Error::MissingKey(_) => "missing-key",
            Error::UnitViolation { .. } => "unit-violation",
            Error::InvalidValue { .. } => "invalid-value",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
            Error::Serde(_) => "serde",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
