use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no admissible beta in [{lo:e}, {hi:e}]: threshold never exceeds n * upper variance")]
    NoAdmissibleBeta { lo: f64, hi: f64 },

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: msg.into(),
        }
    }

    /// Numeric failures get their own exit code in the CLI.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::NoAdmissibleBeta { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
