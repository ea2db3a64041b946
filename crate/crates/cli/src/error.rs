use std::fmt;

/// Exit code 2.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code 1.
pub const EXIT_RUNTIME: u8 = 1;

#[derive(Debug)]
pub enum CliError {
    Config { field: String, message: String },
    Runtime(String),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError::Runtime(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            CliError::Config { field, .. } => Some(field),
            CliError::Runtime(_) => None,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, message } => {
                write!(f, "configuration error in `{field}`: {message}")
            }
            CliError::Runtime(message) => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Parameter errors from the library are configuration errors; numerical
/// failures are runtime errors.
impl From<deltakick::Error> for CliError {
    fn from(e: deltakick::Error) -> Self {
        match e {
            deltakick::Error::Validation(_) | deltakick::Error::Domain(_) => {
                CliError::config("config", e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}
