use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: String,
        domain: String,
    },

    #[error("not a dimension function: {0}")]
    NotADimensionFunction(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: impl ToString, domain: impl ToString) -> Self {
        Error::Domain {
            what,
            value: value.to_string(),
            domain: domain.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
