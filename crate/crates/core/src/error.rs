//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("{function}: argument {name} = {value} is outside the domain")]
    Domain {
        function: &'static str,
        name: &'static str,
        value: f64,
    },

    #[error("{0}: empty input")]
    Empty(&'static str),

    /// The real part of the received DL statistic is exactly zero, so the
    /// moment-based estimators are undefined.
    #[error("degenerate observation: real part of z is zero")]
    DegenerateObservation,

    #[error("likelihood is not finite anywhere in the search bracket")]
    EstimationFailed,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, name: &'static str, value: f64) -> Error {
    Error::Domain { function, name, value }
}
