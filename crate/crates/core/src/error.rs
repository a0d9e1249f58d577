use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("history enumeration at length {length} needs {count} entries, above the cap of {cap}")]
    HistoryCap { length: usize, count: u128, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid configuration: {}", format_issues(.0))]
    Config(Vec<ConfigIssue>),
}

/// One offending field of a configuration document.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("{}: {}", i.field, i.message)).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Whether the error comes from the input rather than from running it.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidSpec(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
