//! Problem documents, trade-off reports, dose-volume tables and the `invmo`
//! command-line interface on top of `invmo-core`.

pub mod cli;
pub mod document;
pub mod dvh;
pub mod json;
pub mod pool;
pub mod report;
pub mod run;
pub mod verify;

pub use document::ProblemDocument;
pub use report::TradeoffReport;

/// Failures surfaced by the command-line interface, split by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable files, malformed documents, inconsistent options: exit 2.
    Input(String),
    /// Infeasible, unbounded or stalled solves: exit 1.
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "bad input: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<invmo_core::Error> for CliError {
    fn from(e: invmo_core::Error) -> Self {
        use invmo_core::Error as E;
        match e {
            E::DimensionMismatch { .. }
            | E::NotPsd { .. }
            | E::RankDeficient { .. }
            | E::HingeConstraint
            | E::NoObjectives
            | E::NonFinite
            | E::NonPositiveObjective { .. }
            | E::InvalidWeights
            | E::ZeroWeightVector
            | E::InvalidScheme(_)
            | E::IndexOutOfRange { .. }
            | E::InfeasibleInput { .. }
            | E::InvalidOption(_) => CliError::Input(e.to_string()),
            E::UnliftedHinge | E::Infeasible | E::InstanceInfeasible | E::Unbounded | E::MaxIterations | E::Lp(_) => {
                CliError::Solver(e.to_string())
            }
        }
    }
}
