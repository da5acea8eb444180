use std::fmt;

use hankel_mintime::Error;

/// Failure of a command, each kind with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// The problem has no feasible point.
    Infeasible(String),
    /// Data-driven and state-space answers differ.
    Disagreement(String),
    /// Malformed or inconsistent scenario, model or data.
    Config(String),
    Io(String),
    /// The LP solver stopped without an answer.
    SolveFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => 2,
            CliError::Disagreement(_) => 3,
            CliError::Config(_) => 4,
            CliError::Io(_) => 5,
            CliError::SolveFailed(_) => 6,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Disagreement(m) => write!(f, "disagreement: {m}"),
            CliError::Config(m) => write!(f, "bad configuration: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::SolveFailed(m) => write!(f, "solve failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Infeasible(_) => CliError::Infeasible(msg),
            Error::SolveFailed { .. } | Error::Internal(_) => CliError::SolveFailed(msg),
            Error::Io(_) | Error::Csv(_) => CliError::Io(msg),
            Error::InvalidArgument(_)
            | Error::NotObservable { .. }
            | Error::NotAdmissible { .. } => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
