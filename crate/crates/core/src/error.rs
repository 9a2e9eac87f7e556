use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A target value is not attainable by a monotone function on its
    /// domain. `below` tells on which side of the attainable range it fell.
    #[error("value {value} outside attainable range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64, below: bool },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("shift-log transform produced non-positive values at {0:?}")]
    NonPositiveShift(Vec<(String, String)>),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
