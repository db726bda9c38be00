//! Staggered-grid finite differences for the parabolic-parabolic
//! Keller-Segel system
//!
//! ```text
//! rho_t = div(grad rho - lambda rho grad c)
//! c_t   = lap c - c + rho
//! ```
//!
//! with homogeneous Neumann conditions on a rectangle. The time marching
//! is linear, decoupled and conserves the discrete mass of `rho` exactly.

pub mod error;
pub mod fields;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod problems;
pub mod scheme;

pub use error::{Error, Result};
pub use fields::{CellField, EdgeFieldX, EdgeFieldY, GradientPair, GridRef};
pub use grid::{Axis1D, GridFamily, StaggeredGrid2D};
pub use linalg::{SolveReport, SolverOptions, SparseMatrix};
pub use problems::{ExactSolution, Forcing, ProblemSpec, BUILTIN_PROBLEMS};
pub use scheme::{
    error_norms, ErrorNorms, RunRecord, Scheme, SchemeConfig, State, StepDiagnostics, Termination,
};
