use std::fmt;

use odrpo_core::OdrpoError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input. Exit 2.
    Input(String),
    /// The estimator is undefined on the given data. Exit 3.
    Estimator(String),
    /// A resource guard refused the computation. Exit 4.
    TooLarge(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Estimator(_) => 3,
            CliError::TooLarge(_) => 4,
        }
    }

    pub fn context(self, prefix: impl fmt::Display) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{prefix}: {m}")),
            CliError::Estimator(m) => CliError::Estimator(format!("{prefix}: {m}")),
            CliError::TooLarge(m) => CliError::TooLarge(format!("{prefix}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Estimator(m) => write!(f, "estimator error: {m}"),
            CliError::TooLarge(m) => write!(f, "resource guard: {m}"),
        }
    }
}

impl From<OdrpoError> for CliError {
    fn from(e: OdrpoError) -> Self {
        match e {
            OdrpoError::TooLarge { .. } => CliError::TooLarge(e.to_string()),
            OdrpoError::MeanTooSmall { .. } | OdrpoError::DegenerateMatrix => CliError::Estimator(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
