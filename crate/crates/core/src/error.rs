use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, dimensions or settings that cannot work together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs that violate an operation's domain (e.g. non-binary bits).
    #[error("input error: {0}")]
    Input(String),

    /// Calls made out of order: backward without forward, a stale cache,
    /// evaluation of an uncalibrated network.
    #[error("state error: {0}")]
    State(String),

    /// A channel coefficient too close to zero to invert.
    #[error("degenerate channel: |h|^2 = {0:e}")]
    DegenerateChannel(f64),

    /// A persisted artifact failed to parse.
    #[error("{}:{line}: {msg}", path.display())]
    Corrupt {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
