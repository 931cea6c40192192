//! Application errors carrying the process exit-code contract:
//! 0 ok, 1 I/O, 2 validation/config, 3 compatibility.

use std::path::PathBuf;

use roadcast_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("config: {0}")]
    Config(String),
    #[error("incompatible: {0}")]
    Compat(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } => 1,
            AppError::Schema(_) | AppError::Validation(_) | AppError::Config(_) => 2,
            AppError::Compat(_) => 3,
            AppError::Core(CoreError::FingerprintMismatch { .. }) => 3,
            AppError::Core(_) => 2,
        }
    }
}

/// Maps csv-crate errors onto the exit contract: wrapped I/O errors stay
/// I/O, anything else is malformed input.
pub fn from_csv(path: &std::path::Path, e: csv::Error) -> AppError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => AppError::io(path, io),
            _ => unreachable!("is_io_error guarantees an Io kind"),
        }
    } else {
        AppError::Validation(format!("{}: {e}", path.display()))
    }
}
