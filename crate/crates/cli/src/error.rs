use std::fmt;

use pnc_core::Error;

/// A failure carrying the process exit code.
///
/// 2: usage or configuration, 3: I/O, 4: corrupt artifact, 1: anything else.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    pub fn new(code: i32, msg: impl Into<String>) -> Self {
        CliError {
            code,
            msg: msg.into(),
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::new(2, msg)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Input(_) => 2,
            Error::Io { .. } => 3,
            Error::Corrupt { .. } => 4,
            _ => 1,
        };
        CliError::new(code, e.to_string())
    }
}
