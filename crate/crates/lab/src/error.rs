use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Acceptance(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// 2 for bad input, 3 for mechanism preconditions, 4 for failed
    /// acceptance checks, 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Parse { .. } | LabError::Validation(_) => 2,
            LabError::Precondition(_) => 3,
            LabError::Acceptance(_) => 4,
            LabError::Io(_) => 1,
        }
    }
}

impl From<oda_core::Error> for LabError {
    fn from(e: oda_core::Error) -> Self {
        match e {
            oda_core::Error::Precondition(_) | oda_core::Error::Routing(_) => LabError::Precondition(e.to_string()),
            other => LabError::Validation(other.to_string()),
        }
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(std::io::Error::other(e))
    }
}

pub type LabResult<T> = Result<T, LabError>;
