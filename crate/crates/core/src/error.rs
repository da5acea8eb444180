use thiserror::Error;

use crate::lpsolve::LpStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model is not observable (rank of observability matrix {rank} < {n})")]
    NotObservable { rank: usize, n: usize },

    #[error("trajectory pair is not admissible (residual {residual:.3e} > tolerance {tol:.3e})")]
    NotAdmissible { residual: f64, tol: f64 },

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("LP solve failed with status {status:?}")]
    SolveFailed { status: LpStatus },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
