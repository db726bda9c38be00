//! Sparse matrices and the Krylov solvers used for the per-step systems.

mod csr;
mod dense;
mod krylov;

pub use csr::SparseMatrix;
pub use dense::dense_solve;
pub use krylov::{bicgstab, cg, Preconditioner, SolveReport, SolverOptions};
