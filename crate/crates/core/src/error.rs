use std::path::PathBuf;

/// Errors produced by the tracking engine and its file formats.
///
/// Format errors always carry a location (source name plus line or byte
/// offset) so that callers can point users at the offending input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error("{source_name}: byte {offset}: {msg}")]
    Binary {
        source_name: String,
        offset: usize,
        msg: String,
    },

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bundle validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("frame {got} does not follow frame {last}")]
    FrameOrder { last: u64, got: u64 },

    #[error("singular innovation covariance")]
    Singular,

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn binary(source_name: &str, offset: usize, msg: impl Into<String>) -> Self {
        Error::Binary {
            source_name: source_name.to_string(),
            offset,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
