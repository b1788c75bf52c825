use std::fmt;

use halograph::ErrorClass;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Core(halograph::Error),
    Usage(String),
    Data(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => "usage",
                ErrorClass::Data => "data",
                ErrorClass::Numeric => "numeric",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => EXIT_USAGE,
            "numeric" => EXIT_NUMERIC,
            _ => EXIT_DATA,
        }
    }

    /// One JSON object on one line.
    pub fn to_line(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<halograph::Error> for CliError {
    fn from(e: halograph::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}
