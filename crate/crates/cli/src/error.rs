use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Arguments are inconsistent or refer to unusable paths.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] swarch::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "data",
            CliError::Core(e) => match e {
                swarch::Error::Numeric(_) | swarch::Error::NoSolution(_) => "numeric",
                _ => "data",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 2,
            "numeric" => 4,
            _ => 3,
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() }).to_string()
    }
}

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}
