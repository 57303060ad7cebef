//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Errors produced by model construction, solvers, and evaluators.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Construction-time validation failure (shape, sign, irreducibility,
    /// convexity sampling, partition coverage, ...). The message names the
    /// violated condition.
    InvalidModel(String),
    /// A dense linear solve met a numerically singular matrix.
    SingularSystem,
    /// The CTMC induced by a policy has an ambiguous recurrent class.
    ReducibleChain,
    /// Long-run stability `ū > mean arrival rate` fails; `phase` identifies
    /// the offending single-phase subproblem where applicable.
    Unstable {
        mean_rate: f64,
        u_max: f64,
        phase: Option<usize>,
    },
    /// An iterative solver hit its sweep cap before meeting its tolerance.
    NonConvergence { iterations: u64 },
    /// A partition of the period contains an empty or negative-width cell.
    DegeneratePartition { index: usize },
}

impl Error {
    /// Bare variant name, used by front ends that report the error class on
    /// a diagnostic stream separately from the full message.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "InvalidModel",
            Error::SingularSystem => "SingularSystem",
            Error::ReducibleChain => "ReducibleChain",
            Error::Unstable { .. } => "Unstable",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::DegeneratePartition { .. } => "DegeneratePartition",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidModel(msg) => write!(f, "InvalidModel: {msg}"),
            Error::SingularSystem => write!(f, "SingularSystem"),
            Error::ReducibleChain => write!(f, "ReducibleChain"),
            Error::Unstable {
                mean_rate,
                u_max,
                phase,
            } => match phase {
                Some(s) => write!(
                    f,
                    "Unstable: phase {s} arrival rate {mean_rate} >= u_max {u_max}"
                ),
                None => write!(f, "Unstable: mean arrival rate {mean_rate} >= u_max {u_max}"),
            },
            Error::NonConvergence { iterations } => {
                write!(f, "NonConvergence after {iterations} sweeps")
            }
            Error::DegeneratePartition { index } => {
                write!(f, "DegeneratePartition at index {index}")
            }
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
