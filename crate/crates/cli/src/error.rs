use thiserror::Error;

/// Failure classes with distinct exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Missing files, unreadable scenes, invalid configuration.
    #[error("input error: {0}")]
    Input(String),
    #[error("pipeline error: {0}")]
    Pipeline(#[from] activeview_core::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Pipeline(_) | CliError::Output(_) => 3,
        }
    }
}
