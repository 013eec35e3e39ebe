use std::fmt;

/// Exit status 1: config could not be read or parsed.
pub const EXIT_CONFIG: i32 = 1;
/// Exit status 2: a model routine rejected the request.
pub const EXIT_DOMAIN: i32 = 2;
/// Exit status 64: bad command line.
pub const EXIT_USAGE: i32 = 64;
/// Exit status 74: output could not be written.
pub const EXIT_IO: i32 = 74;

#[derive(Debug)]
pub enum CliError {
    /// `key` is the dotted path of the offending config entry.
    Config { key: String, message: String },
    Domain(ringlink_core::Error),
    Usage(String),
    Io { path: String, message: String },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { key, message } => write!(f, "config error at `{key}`: {message}"),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ringlink_core::Error> for CliError {
    fn from(e: ringlink_core::Error) -> Self {
        CliError::Domain(e)
    }
}
