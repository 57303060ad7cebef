//! Failure classification for the process exit code.
//!
//! Everything that goes wrong before a solver runs (unreadable file, schema
//! violation, model validation) exits with code 1. Failures inside the
//! numerics (instability, singular systems, non-convergence) exit with
//! code 2 and lead with the error name so scripts can branch on it.

use core::fmt;

use mmq_core::Error;

#[derive(Debug)]
pub enum Failure {
    /// Configuration, schema, or model validation problem: exit code 1.
    Config(String),
    /// Numeric failure inside a solver or evaluator: exit code 2.
    Numeric(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "{msg}"),
            // `Error`'s Display already leads with the variant name.
            Failure::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Unstable { .. } | Error::NonConvergence { .. } | Error::SingularSystem => {
                Failure::Numeric(e)
            }
            // Construction-time rejections are schema-class failures: the
            // input described an invalid model, not a model the numerics
            // could not handle.
            Error::InvalidModel(_) | Error::ReducibleChain | Error::DegeneratePartition { .. } => {
                Failure::Config(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("io error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(format!("csv error: {e}"))
    }
}
