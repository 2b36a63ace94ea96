use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] landscape_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Some acceptance checks failed; the report has been written.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2 for anything the caller can fix by changing the invocation, 1 for
    /// numerical and output failures.
    pub fn exit_code(&self) -> i32 {
        use landscape_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::InvalidModel(_) | E::Domain(_) | E::Regime(_) | E::TooLarge(_)) => 2,
            CliError::Core(E::Quadrature(_) | E::Numerical(_)) => 1,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) | CliError::Failed(_) => 1,
        }
    }
}
