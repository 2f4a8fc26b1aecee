//! Errors shared by the outer solvers.

use crate::convergence::ConvergenceLog;
use crate::linalg::LinAlgError;

/// Failure of an outer solve. `MaxIterations` still carries the last state
/// and the full convergence history so callers can inspect or persist the
/// best available approximation.
#[derive(Debug, thiserror::Error)]
pub enum SolverError<S> {
    #[error("maximum number of outer iterations exceeded")]
    MaxIterations {
        state: Box<S>,
        log: ConvergenceLog,
    },
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

impl<S> SolverError<S> {
    /// The convergence log, when the failure produced one.
    pub fn log(&self) -> Option<&ConvergenceLog> {
        match self {
            SolverError::MaxIterations { log, .. } => Some(log),
            SolverError::LinAlg(_) => None,
        }
    }
}
