use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cesaro_lmc::Error),
    #[error("{0}")]
    ChecksFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for configuration and parameter errors, 3 for divergence, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use cesaro_lmc::Error as E;
        match self {
            CliError::Config(_) | CliError::Json(_) => 2,
            CliError::Core(E::Parameter(_) | E::Capability(_)) => 2,
            CliError::Core(E::Divergence { .. } | E::Experiment(_)) => 3,
            _ => 1,
        }
    }
}
