use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or input; exit code 1.
    #[error("{0}")]
    User(String),
    /// A broken internal guarantee; exit code 2.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    pub fn user(msg: impl Into<String>) -> Self {
        CliError::User(msg.into())
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::User(format!("{}: {err}", path.display()))
    }
}

impl From<saleslens::Error> for CliError {
    fn from(e: saleslens::Error) -> Self {
        use saleslens::Error as E;
        match e {
            E::NotConverged(_) | E::ZeroCover => CliError::Internal(e.to_string()),
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::User(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
