//! Error taxonomy shared by every module.
//!
//! The four variants map onto the process exit codes of the experiment
//! runner: input and parameter problems are usage errors, domain and numeric
//! problems are runtime failures of the mathematics.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Malformed data: non-finite entries, dimension mismatches, empty grids.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter outside its documented range.
    #[error("parameter out of range: {0}")]
    Parameter(String),

    /// Input outside the mathematical domain of the operation
    /// (branch cuts, spectra touching a contour).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iteration failed to converge or a result overflowed.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
