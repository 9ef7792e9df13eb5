use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    ConfigInvalid(abloc_core::Error),
    #[error("numeric failure: {0}")]
    Numeric(abloc_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed {what}: {message}")]
    Decode { what: String, message: String },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_IO: u8 = 5;

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::ConfigParse { .. } | HarnessError::ConfigInvalid(_) => EXIT_CONFIG,
            HarnessError::Numeric(_) => EXIT_NUMERIC,
            HarnessError::Io { .. } | HarnessError::Decode { .. } => EXIT_IO,
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn decode(what: impl Into<String>, message: impl ToString) -> Self {
        HarnessError::Decode {
            what: what.into(),
            message: message.to_string(),
        }
    }
}

impl From<abloc_core::Error> for HarnessError {
    fn from(e: abloc_core::Error) -> Self {
        HarnessError::Numeric(e)
    }
}
