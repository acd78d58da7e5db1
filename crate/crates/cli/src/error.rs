use std::path::{Path, PathBuf};

use thiserror::Error;

/// Process exit statuses.
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: glove_core::Error,
    },

    #[error(transparent)]
    Core(#[from] glove_core::Error),

    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use glove_core::Error as E;
        let core = match self {
            CliError::Usage(_) => return EXIT_USAGE,
            CliError::Data(_) => return EXIT_DATA,
            CliError::File { source, .. } => source,
            CliError::Core(e) => e,
        };
        match core {
            E::NumericOverflow { .. } => EXIT_NUMERIC,
            E::Config(_) | E::Domain(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attach a file path to errors coming out of the core library.
pub trait WithPath<T> {
    fn at(self, path: &Path) -> Result<T>;
}

impl<T, E: Into<glove_core::Error>> WithPath<T> for std::result::Result<T, E> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|e| CliError::File {
            path: path.to_owned(),
            source: e.into(),
        })
    }
}
