//! Failure modes of the command layer and their process exit codes.

use thiserror::Error;

/// Exit codes the binary commits to.
pub mod exit_code {
    /// Clean run, output written.
    pub const SUCCESS: u8 = 0;
    /// The request was unusable: bad flags, bad values, bad paths.
    pub const CONFIG: u8 = 2;
    /// A requested quantity did not resolve inside its horizon.
    pub const UNRESOLVED: u8 = 3;
    /// The verification suite completed and found failing checks.
    pub const VERIFY: u8 = 4;
}

/// What a command run can end with, beyond success.
#[derive(Debug, Error)]
pub enum CliError {
    /// The request itself cannot be executed as stated.
    #[error("{0}")]
    Config(String),

    /// The computation ran but the asked-for quantity was never reached,
    /// e.g. a mixing time that lies beyond the configured horizon.
    #[error("{0}")]
    Unresolved(String),

    /// Verification checks failed.  The rendered report is carried along
    /// so it can still be written before exiting.
    #[error("verification failed")]
    Verification {
        /// Full report text, one line per check.
        rendered: String,
    },
}

impl CliError {
    /// The exit code this failure maps to.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit_code::CONFIG,
            CliError::Unresolved(_) => exit_code::UNRESOLVED,
            CliError::Verification { .. } => exit_code::VERIFY,
        }
    }
}

impl From<hypercut::Error> for CliError {
    fn from(e: hypercut::Error) -> Self {
        match e {
            hypercut::Error::Unresolved { .. } => CliError::Unresolved(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("config serialization: {e}"))
    }
}

/// Command-layer result alias.
pub type Result<T> = std::result::Result<T, CliError>;
