use thiserror::Error;

use crate::solver::InnerSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The ellipsoid method hit its iteration cap; carries the best iterate found.
    #[error("dual solver did not converge after {iterations} iterations (gap {gap:e})")]
    Convergence {
        iterations: usize,
        gap: f64,
        best: Box<InnerSolution>,
    },

    /// An iterative oracle stopped before meeting its tolerance.
    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid point {index}: {source}")]
    GridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}
