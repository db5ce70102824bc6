use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("climate data: {0}")]
    Climate(#[from] ClimateError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("table error: {0}")]
    Table(String),

    #[error("calibration mismatch: {0}")]
    Calibration(String),

    #[error("non-finite value in {quantity} at hour {hour}")]
    NonFinite { quantity: &'static str, hour: usize },

    #[error("{0}")]
    Domain(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

/// Rejections raised while ingesting an hourly climate file. Row indices are
/// 1-based data rows (the header is not counted).
#[derive(Debug, Error, PartialEq)]
pub enum ClimateError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: cannot parse {field} from `{value}`")]
    Parse {
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error("row {row}: negative irradiance {field} = {value}")]
    NegativeIrradiance {
        row: usize,
        field: &'static str,
        value: f64,
    },
    #[error("row {row}: timestamps not strictly hourly-increasing")]
    NonMonotone { row: usize },
    #[error("incomplete year: expected 8760 hourly records, found {0}")]
    IncompleteYear(usize),
    #[error("malformed file: {0}")]
    Malformed(String),
}
