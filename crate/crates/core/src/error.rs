use std::path::PathBuf;

use crate::solver::{CoupledState, IterationLog};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("spaces are defined on different meshes")]
    MeshMismatch,

    #[error("linear solve failed for {rows}x{cols} system with {nnz} nonzeros: {reason}")]
    SingularSystem {
        rows: usize,
        cols: usize,
        nnz: usize,
        reason: String,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last increment {last_increment:e})")]
    NonConvergence {
        iterations: usize,
        last_increment: f64,
        state: Box<CoupledState>,
        log: Box<IterationLog>,
    },

    #[error("fixed-point iteration diverged at iteration {iteration} (increment {increment:e})")]
    Diverged {
        iteration: usize,
        increment: f64,
        log: Box<IterationLog>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the nonlinear iteration (as opposed to bad input or I/O).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::Diverged { .. } | Error::SingularSystem { .. }
        )
    }
}
