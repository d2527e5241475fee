use bubble_core::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Simulation(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            Self::Parse(_) => 1,
            Self::Validation(_) => 2,
            Self::Solver(_) => 3,
            Self::Simulation(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Parse(_) => "parse",
            Self::Validation(_) => "validation",
            Self::Solver(_) => "solver",
            Self::Simulation(_) => "simulation",
        }
    }

    /// One-line JSON record for standard error.
    pub fn line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "code": self.code(), "message": self.to_string() }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain { .. } | Error::InvalidParameter(_) | Error::Validation(_) | Error::Precondition(_) => {
                Self::Validation(msg)
            }
            Error::NonConvergence { .. } | Error::RejectedTilt(_) => Self::Solver(msg),
            Error::Simulation(_) => Self::Simulation(msg),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Parse(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Parse(e.to_string())
    }
}
