use std::fmt;

/// Failures mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Unparseable or inconsistent configuration; exit 2.
    Config(String),
    /// A computation failed; exit 3.
    Numeric(String),
    /// `verify` found a violation; exit 1.
    Verify(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Verify(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Numeric(_) => "numeric",
            Self::Verify(_) => "verify",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Numeric(m) | Self::Verify(m) => m,
        }
    }

    /// One JSON object on one line.
    pub fn json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "code": self.code(), "message": self.message() }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl From<cyclosc::Error> for CliError {
    fn from(e: cyclosc::Error) -> Self {
        match e {
            cyclosc::Error::InvalidInput(_) | cyclosc::Error::DimensionMismatch { .. } => Self::Config(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}
