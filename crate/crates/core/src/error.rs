//! Crate-wide error type and process exit-code mapping.

use crate::classical::ClassicalError;
use crate::data::DataError;
use crate::design::DesignError;
use crate::formula::FormulaError;
use crate::mcd::McdError;
use crate::robust::RobustError;
use thiserror::Error;

/// Top-level error for the full pipeline.
///
/// Each variant maps to one documented process exit code so that callers
/// (the CLI, the C API) can distinguish failure classes:
///
/// * 2 — usage / output destination
/// * 3 — data ingestion
/// * 4 — formula
/// * 5 — rank-deficient or otherwise unusable design
/// * 6 — MCD exact fit or singularity
/// * 7 — modified-design singularity
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Data(#[from] DataError),
    #[error("{0}")]
    Formula(#[from] FormulaError),
    #[error("{0}")]
    Design(#[from] DesignError),
    #[error("{0}")]
    Classical(#[from] ClassicalError),
    #[error("{0}")]
    Mcd(#[from] McdError),
    #[error("{0}")]
    Robust(#[from] RobustError),
    #[error("cannot write output: {0}")]
    Output(std::io::Error),
}

impl Error {
    /// Documented process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Output(_) => 2,
            Error::Data(_) => 3,
            // data problems discovered while binding the formula count as
            // data errors; a reference to a column that does not exist is a
            // formula problem
            Error::Design(DesignError::MissingValues { .. })
            | Error::Design(DesignError::SingleLevelCategorical { .. }) => 3,
            Error::Formula(_) | Error::Design(DesignError::UnknownVariable { .. }) => 4,
            Error::Design(_) | Error::Classical(_) => 5,
            Error::Mcd(_) => 6,
            Error::Robust(_) => 7,
        }
    }
}
