//! Preconditioned conjugate gradients and BiCGStab.
//!
//! Convergence is declared on the true relative residual
//! `||b - A x||_2 / ||b||_2`: whenever the recurrence residual drops below
//! the tolerance, the residual is recomputed from scratch and the iteration
//! restarts from it if the check fails. The reported residual is always the
//! recomputed one.
//!
//! Both solvers give up early, with `converged = false`, when the tolerance
//! is out of reach: after [`MAX_TRUE_RESIDUAL_RESTARTS`] failed checks, or
//! once the recurrence residual exceeds [`DIVERGENCE_FACTOR`] times the
//! initial residual.

use std::fmt;

use super::SparseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// Defaults to `10 n` when `None`.
    pub max_iter: Option<usize>,
    pub precond: Preconditioner,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: None,
            precond: Preconditioner::Jacobi,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_relative_residual: f64,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} after {} iterations, relative residual {:e}",
            if self.converged { "converged" } else { "not converged" },
            self.iterations,
            self.final_relative_residual
        )
    }
}

/// Failed true-residual checks tolerated before giving up.
pub const MAX_TRUE_RESIDUAL_RESTARTS: usize = 25;

/// Growth of the residual norm treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Setup {
    inv_diag: Option<Vec<f64>>,
    max_iter: usize,
    b_norm: f64,
}

fn setup(a: &SparseMatrix, b: &[f64], x0: Option<&[f64]>, opts: &SolverOptions) -> Result<Setup> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::domain(format!(
            "iterative solvers need a square matrix, got {} x {}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    if b.len() != a.n_rows() {
        return Err(Error::Dimension {
            expected: a.n_rows(),
            found: b.len(),
        });
    }
    if let Some(x0) = x0 {
        if x0.len() != b.len() {
            return Err(Error::Dimension {
                expected: b.len(),
                found: x0.len(),
            });
        }
    }
    if !(opts.tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let inv_diag = match opts.precond {
        Preconditioner::None => None,
        // zero diagonal entries fall back to the identity
        Preconditioner::Jacobi => Some(
            a.diagonal()
                .into_iter()
                .map(|d| if d != 0.0 && d.is_finite() { 1.0 / d } else { 1.0 })
                .collect(),
        ),
    };
    Ok(Setup {
        inv_diag,
        max_iter: opts.max_iter.unwrap_or(10 * b.len()),
        b_norm: norm(b),
    })
}

fn apply_precond(inv_diag: &Option<Vec<f64>>, r: &[f64], z: &mut [f64]) {
    match inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    }
}

fn true_residual(a: &SparseMatrix, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.matvec_into(x, r).expect("dimensions checked");
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
}

/// Preconditioned conjugate gradients for symmetric positive definite `A`.
///
/// Symmetry is the caller's responsibility. A non-positive curvature
/// `p^T A p` ends the iteration with `converged = false`.
pub fn cg(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let s = setup(a, b, x0, opts)?;
    let n = b.len();
    if s.b_norm == 0.0 {
        return Ok((vec![0.0; n], converged(0, 0.0)));
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = vec![0.0; n];
    true_residual(a, b, &x, &mut r);
    let mut rel = norm(&r) / s.b_norm;
    if rel <= opts.tol {
        return Ok((x, converged(0, rel)));
    }

    let mut z = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply_precond(&s.inv_diag, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let r0 = norm(&r);
    let mut restarts = 0;

    for it in 1..=s.max_iter {
        a.matvec_into(&p, &mut ap)?;
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) || !curvature.is_finite() {
            true_residual(a, b, &x, &mut r);
            return Ok((x, failed(it, norm(&r) / s.b_norm)));
        }
        let alpha = rz / curvature;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rel = norm(&r) / s.b_norm;
        if rel <= opts.tol {
            true_residual(a, b, &x, &mut r);
            rel = norm(&r) / s.b_norm;
            if rel <= opts.tol {
                return Ok((x, converged(it, rel)));
            }
            restarts += 1;
            if restarts > MAX_TRUE_RESIDUAL_RESTARTS {
                return Ok((x, failed(it, rel)));
            }
            apply_precond(&s.inv_diag, &r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        if !(rel * s.b_norm <= DIVERGENCE_FACTOR * r0) {
            true_residual(a, b, &x, &mut r);
            return Ok((x, failed(it, norm(&r) / s.b_norm)));
        }
        apply_precond(&s.inv_diag, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    true_residual(a, b, &x, &mut r);
    Ok((x, failed(s.max_iter, norm(&r) / s.b_norm)))
}

/// Right-preconditioned BiCGStab for general square `A`.
///
/// A vanishing `(r_hat, r)` restarts the iteration once with a fresh shadow
/// residual; a second breakdown, or a vanishing stabilisation parameter,
/// ends the iteration with `converged = false`.
pub fn bicgstab(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let s = setup(a, b, x0, opts)?;
    let n = b.len();
    if s.b_norm == 0.0 {
        return Ok((vec![0.0; n], converged(0, 0.0)));
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = vec![0.0; n];
    true_residual(a, b, &x, &mut r);
    let rel = norm(&r) / s.b_norm;
    if rel <= opts.tol {
        return Ok((x, converged(0, rel)));
    }

    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_vec = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut restarted = false;
    let mut restarts = 0;
    let r0 = norm(&r);

    let mut it = 0;
    while it < s.max_iter {
        it += 1;
        let rho_new = dot(&r_hat, &r);
        let tiny = f64::EPSILON * f64::EPSILON * norm(&r_hat) * norm(&r);
        if !(rho_new.abs() > tiny) || !rho_new.is_finite() {
            if restarted || !rho_new.is_finite() {
                break;
            }
            restarted = true;
            true_residual(a, b, &x, &mut r);
            r_hat.copy_from_slice(&r);
            p.fill(0.0);
            v.fill(0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        apply_precond(&s.inv_diag, &p, &mut p_hat);
        a.matvec_into(&p_hat, &mut v)?;
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        alpha = rho / denom;
        for k in 0..n {
            s_vec[k] = r[k] - alpha * v[k];
        }
        if norm(&s_vec) / s.b_norm <= opts.tol {
            for k in 0..n {
                x[k] += alpha * p_hat[k];
            }
            if let Some(done) = check_converged(a, b, &x, &mut r, s.b_norm, opts.tol, it) {
                return Ok((x, done));
            }
            restarts += 1;
            if restarts > MAX_TRUE_RESIDUAL_RESTARTS {
                break;
            }
            r_hat.copy_from_slice(&r);
            p.fill(0.0);
            v.fill(0.0);
            (rho, alpha, omega) = (1.0, 1.0, 1.0);
            continue;
        }
        apply_precond(&s.inv_diag, &s_vec, &mut s_hat);
        a.matvec_into(&s_hat, &mut t)?;
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s_vec) / tt } else { 0.0 };
        for k in 0..n {
            x[k] += alpha * p_hat[k] + omega * s_hat[k];
            r[k] = s_vec[k] - omega * t[k];
        }
        if norm(&r) / s.b_norm <= opts.tol {
            if let Some(done) = check_converged(a, b, &x, &mut r, s.b_norm, opts.tol, it) {
                return Ok((x, done));
            }
            restarts += 1;
            if restarts > MAX_TRUE_RESIDUAL_RESTARTS {
                break;
            }
            r_hat.copy_from_slice(&r);
            p.fill(0.0);
            v.fill(0.0);
            (rho, alpha, omega) = (1.0, 1.0, 1.0);
            continue;
        }
        if omega == 0.0 || !omega.is_finite() || !(norm(&r) <= DIVERGENCE_FACTOR * r0) {
            break;
        }
    }
    true_residual(a, b, &x, &mut r);
    Ok((x, failed(it, norm(&r) / s.b_norm)))
}

fn check_converged(
    a: &SparseMatrix,
    b: &[f64],
    x: &[f64],
    r: &mut [f64],
    b_norm: f64,
    tol: f64,
    it: usize,
) -> Option<SolveReport> {
    true_residual(a, b, x, r);
    let rel = norm(r) / b_norm;
    (rel <= tol).then(|| converged(it, rel))
}

fn converged(iterations: usize, rel: f64) -> SolveReport {
    SolveReport {
        converged: true,
        iterations,
        final_relative_residual: rel,
    }
}

fn failed(iterations: usize, rel: f64) -> SolveReport {
    SolveReport {
        converged: false,
        iterations,
        final_relative_residual: rel,
    }
}
