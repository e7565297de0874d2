use std::fmt;

/// CLI failure with a process exit code: 2 = configuration, 3 = runtime.
/// (Usage errors exit 1 straight from the argument parser; successful runs
/// and `--help`/`--version` exit 0.)
#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent configuration: unreadable config files, invalid
    /// geometry, out-of-range flag values, artifact/config mismatches.
    Config(String),
    /// Failure while processing data: I/O, malformed datasets, fits that do
    /// not converge.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    /// Wraps a core error found while resolving or validating configuration.
    pub fn config(e: impl fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    /// Wraps a core error found while processing data.
    pub fn runtime(e: impl fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<ftind_core::Error> for CliError {
    fn from(e: ftind_core::Error) -> Self {
        CliError::runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::runtime(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
