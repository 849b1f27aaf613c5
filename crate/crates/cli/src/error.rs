use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    /// Unreadable inputs and missing artifacts from earlier stages.
    #[error("{0}")]
    Io(String),

    #[error("refusing to overwrite {0}: contents differ (rerun with --force)")]
    Overwrite(String),

    #[error(transparent)]
    Core(#[from] old_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use old_core::Error as E;
        match self {
            CliError::Validation(_) | CliError::Overwrite(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e {
                E::Parse { .. } | E::Validation(_) => EXIT_VALIDATION,
                E::Io { .. } | E::SnapshotIo { .. } | E::Stream(_) => EXIT_IO,
                E::NonConvergence { .. } => EXIT_NONCONVERGENCE,
            },
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}
