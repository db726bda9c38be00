use thiserror::Error;

use crate::linalg::SolveReport;
use crate::scheme::StepDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument to a constructor or operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("fields live on different grids: {0}")]
    GridMismatch(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("matrix is singular to working precision (pivot {pivot:e} in column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("{system} solve failed: {report}")]
    SolverFailed {
        system: &'static str,
        report: SolveReport,
    },

    /// The density exceeded the blow-up threshold or became non-finite.
    /// Carries the diagnostics of the offending step.
    #[error("blow-up detected at t = {} (max U = {:e})", .0.t, .0.u_max)]
    BlowUpDetected(Box<StepDiagnostics>),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
