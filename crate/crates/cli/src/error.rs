use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] weakorder::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status; a check failure (1) is not an error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigInvalid(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}
