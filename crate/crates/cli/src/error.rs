use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Output(_) => 3,
        }
    }
}

/// Errors while building initial data are configuration errors.
pub fn setup(e: ch2_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

pub fn numerical(e: ch2_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}
