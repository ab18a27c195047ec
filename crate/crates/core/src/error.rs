//! Error types shared across the workspace.
//!
//! Three broad categories map onto the CLI exit codes: invalid
//! inputs/configuration, broken data files, and estimation failures.

use thiserror::Error;

/// Top-level library error.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value failed validation.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A data file could not be read, written, or parsed.
    #[error("data error: {0}")]
    Data(String),
    /// An estimation stage failed.
    #[error("fit error: {0}")]
    Fit(#[from] FitError),
}

/// Failures raised by the fitting and extraction stages.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FitError {
    /// The trace contains no resolvable resonance dip.
    #[error("no dip found in trace")]
    NoDipFound,
    /// The optimizer hit its iteration cap before meeting tolerance.
    #[error("fit did not converge within {0} iterations")]
    NotConverged(usize),
    /// The shift-vs-power curve never reaches the target shift.
    #[error("photon-number crossing not found in scanned power range")]
    CrossingNotFound,
    /// Fitted shifts decrease with power beyond their error bars.
    #[error("fitted shift curve is not monotone in power")]
    NonMonotoneShift,
    /// No tone peak stands far enough above the analyzer noise floor.
    #[error("tone peak not found at least 10 dB above noise floor")]
    PeakNotFound,
    /// Extracted noise sits below vacuum beyond its error bar.
    #[error("calibration inconsistency: added noise below vacuum beyond 3 sigma")]
    BelowVacuum,
    /// The ensemble carries no usable statistics.
    #[error("degenerate ensemble: {0}")]
    Degenerate(String),
    /// A fit-stage failure re-raised with dataset context attached.
    #[error("{0}")]
    Stage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for an `Invalid` error.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Shorthand for a `Data` error.
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Data(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_name_the_failure() {
        let e = Error::from(FitError::NoDipFound);
        assert!(e.to_string().contains("no dip"));
        let e = Error::invalid("negative frequency");
        assert!(e.to_string().contains("negative frequency"));
    }
}
