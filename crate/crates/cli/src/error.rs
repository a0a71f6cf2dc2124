use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("computation failed: {0}")]
    Compute(#[from] eepareto::Error),
}

impl CliError {
    /// Process exit code: 1 config, 2 I/O, 3 verification, 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::VerifyFailed(_) => 3,
            CliError::Compute(e) => match e {
                eepareto::Error::Config(_) | eepareto::Error::Precondition(_) | eepareto::Error::Dimension(_) => 1,
                _ => 4,
            },
        }
    }
}
