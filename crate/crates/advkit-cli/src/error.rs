//! CLI failure taxonomy: validation problems (bad config, bad arguments,
//! missing or malformed inputs) exit with 1; runtime failures (I/O during
//! processing, numerical breakdowns, failed self-checks) exit with 2.

use std::fmt;

use advkit::Error;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    /// The diagnostic as a single line (newlines collapsed).
    pub fn one_line(&self) -> String {
        let text = match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        };
        text.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "runtime failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::DegenerateGradient => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
