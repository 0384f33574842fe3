//! Library half of the `divgraph` binary: config parsing and subcommand
//! implementations, kept callable so the acceptance suite can drive the
//! exact code paths the CLI uses.

pub mod commands;
pub mod config;

/// Errors split by exit code: configuration problems exit 2, runtime stage
/// failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(msg) | CliError::Runtime(msg) => msg,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}
