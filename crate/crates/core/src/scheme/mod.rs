//! The decoupled, linear, mass-conservative time marching.
//!
//! Notation: `L = D_x d_x + D_y d_y` is the discrete Laplacian with
//! homogeneous Neumann faces, and `C(g) U = D_x(I_x(U) g_x) + D_y(I_y(U) g_y)`
//! is the chemotactic flux divergence with face interpolation `I`.
//!
//! The first level is computed in three solves:
//!
//! ```text
//! predict:  (1/tau) U_bar - L U_bar + lambda C(dZ0) U_bar = U0/tau + f_rho(t1)
//! c-solve:  (1/tau + 1/2) Z1 - L Z1/2 = (1/tau - 1/2) Z0 + L Z0/2 + (U_bar + U0)/2 + f_c(t1/2)
//! correct:  (1/tau) U1 - L U1/2 + lambda/2 C(dZ1) U1
//!               = U0/tau + L U0/2 - lambda/2 C(dZ0) U0 + f_rho(t1/2)
//! ```
//!
//! and every later level in two, with `U* = 3 U^n / 2 - U^{n-1} / 2`:
//!
//! ```text
//! (1/tau + 1/2 - L/2) Z^{n+1} = (1/tau - 1/2 + L/2) Z^n + U* + f_c(t^{n+1/2})
//! (1/tau - L/2 + lambda/2 C(dZ^{n+1})) U^{n+1}
//!     = (1/tau + L/2) U^n - lambda/2 C(dZ^n) U^n + f_rho(t^{n+1/2})
//! ```
//!
//! Half-level products are averages of the two full-level products, which
//! keeps every system linear in its single unknown. Unknowns are flattened
//! with `k = j * nx + i`.

pub mod assembly;

use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::fields::{
    delta_correction, dx, dy, gradient, norm_m, norm_tm, CellField, EdgeFieldX, EdgeFieldY,
    GradientPair, GridRef,
};
use crate::linalg::{bicgstab, cg, Preconditioner, SolveReport, SolverOptions, SparseMatrix};
use crate::problems::ProblemSpec;

use assembly::{apply_chemotaxis, apply_laplacian, assemble, cell_areas};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub lambda: f64,
    pub tau: f64,
    pub t_final: f64,
    pub solver_tol: f64,
    pub blowup_threshold: f64,
    /// Evaluate the time-step condition `tau < 4 / (lambda^2 (|dZ|_inf + 1)^2)`
    /// every step and warn when it fails.
    pub uniqueness_monitor: bool,
}

impl SchemeConfig {
    pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;
    pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e12;

    pub fn new(lambda: f64, tau: f64, t_final: f64) -> Self {
        Self {
            lambda,
            tau,
            t_final,
            solver_tol: Self::DEFAULT_SOLVER_TOL,
            blowup_threshold: Self::DEFAULT_BLOWUP_THRESHOLD,
            uniqueness_monitor: true,
        }
    }

    /// Number of steps `t_final / tau`, which must be a positive integer up
    /// to a relative tolerance of `1e-9`.
    pub fn n_steps(&self) -> Result<usize> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.tau) || !positive(self.t_final) {
            return Err(Error::Config(format!(
                "tau and t_final must be positive, got tau = {}, t_final = {}",
                self.tau, self.t_final
            )));
        }
        if !positive(self.solver_tol) || !positive(self.blowup_threshold) {
            return Err(Error::Config(
                "solver_tol and blowup_threshold must be positive".into(),
            ));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        let ratio = self.t_final / self.tau;
        let steps = ratio.round();
        if steps < 1.0 || (steps - ratio).abs() > 1e-9 * ratio {
            return Err(Error::Config(format!(
                "t_final = {} is not an integer multiple of tau = {}",
                self.t_final, self.tau
            )));
        }
        Ok(steps as usize)
    }

    /// `t^n = n tau`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            max_iter: None,
            precond: Preconditioner::Jacobi,
        }
    }

    /// The time-step condition with the observed `|dZ|_inf` standing in for
    /// the a-priori gradient bound.
    pub fn uniqueness_condition(&self, dz_inf: f64) -> bool {
        self.tau < 4.0 / (self.lambda * self.lambda * (dz_inf + 1.0).powi(2))
    }
}

/// Solution levels needed to advance.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub n: usize,
    pub u_curr: CellField,
    /// `U^{n-1}`; absent at `n = 0`.
    pub u_prev: Option<CellField>,
    pub z_curr: CellField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub n: usize,
    pub t: f64,
    /// `(U, 1)_M`
    pub mass: f64,
    pub u_max: f64,
    pub u_min: f64,
    pub z_max: f64,
    pub argmax_u: (usize, usize),
    pub solver_iters_z: usize,
    pub solver_iters_u: usize,
    pub residual_z: f64,
    pub residual_u: f64,
    /// `|d_x Z|_inf + |d_y Z|_inf`
    pub dz_inf: f64,
    /// Outcome of the time-step condition; `true` when the monitor is off.
    pub uniqueness_ok: bool,
}

/// A linear system together with the initial guess used to solve it.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub guess: Vec<f64>,
}

/// Result of one advance: the new state and its diagnostics.
#[derive(Debug, Clone)]
pub struct Advance {
    pub state: State,
    pub diagnostics: StepDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    BlowUp { step: usize, t: f64 },
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    /// Diagnostics of the initial level (zero iteration counts).
    pub initial: StepDiagnostics,
    /// One record per computed level `n >= 1`, including the level that
    /// triggered blow-up detection.
    pub steps: Vec<StepDiagnostics>,
    /// Last state whose values passed the blow-up check.
    pub final_state: State,
    pub termination: Termination,
}

impl RunRecord {
    pub fn initial_mass(&self) -> f64 {
        self.initial.mass
    }

    /// `max_n |mass_n - mass_0| / |mass_0|`, or the absolute drift when the
    /// initial mass is zero.
    pub fn max_relative_mass_drift(&self) -> f64 {
        let m0 = self.initial.mass;
        let scale = if m0 != 0.0 { m0.abs() } else { 1.0 };
        self.steps
            .iter()
            .map(|d| (d.mass - m0).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Discrete error norms against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `|rho - U|_M`
    pub e_rho: f64,
    /// `|c - Z|_M`
    pub e_c: f64,
    /// `|grad c - dZ|_TM` over interior faces
    pub e_gradc: f64,
}

/// The marching scheme bound to one problem, grid and configuration.
///
/// The chemoattractant matrix does not depend on the solution and is
/// assembled once here.
pub struct Scheme {
    problem: ProblemSpec,
    grid: GridRef,
    config: SchemeConfig,
    areas: Vec<f64>,
    z_matrix: SparseMatrix,
    n_steps: usize,
    warned_uniqueness: std::sync::atomic::AtomicBool,
}

impl Scheme {
    pub fn new(problem: &ProblemSpec, grid: GridRef, config: SchemeConfig) -> Result<Self> {
        let n_steps = config.n_steps()?;
        if problem.forcing().is_some() && config.lambda != problem.lambda() {
            return Err(Error::Config(format!(
                "problem '{}' has forcing built for lambda = {}, config uses {}",
                problem.name(),
                problem.lambda(),
                config.lambda
            )));
        }
        let z_matrix = assemble(&grid, 1.0 / config.tau + 0.5, 0.5, None);
        Ok(Self {
            problem: problem.clone(),
            areas: cell_areas(&grid),
            grid,
            config,
            z_matrix,
            n_steps,
            warned_uniqueness: Default::default(),
        })
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// The (time-independent) chemoattractant system matrix.
    pub fn z_matrix(&self) -> &SparseMatrix {
        &self.z_matrix
    }

    /// `U^0` sampled from `rho_0`; `Z^0` is `c_0` sampled minus the
    /// second-derivative correction.
    pub fn init_state(&self) -> Result<State> {
        let (cxx, cyy) = self.problem.c0_second_derivatives().ok_or_else(|| {
            Error::Config(format!(
                "problem '{}' does not provide second derivatives of c0",
                self.problem.name()
            ))
        })?;
        let g = self.grid.clone();
        let u0 = CellField::sample(g.clone(), |x, y| self.problem.rho0(x, y));
        let c0 = CellField::sample(g.clone(), |x, y| self.problem.c0(x, y));
        let delta = delta_correction(
            &CellField::sample(g.clone(), |x, y| cxx(x, y)),
            &CellField::sample(g, |x, y| cyy(x, y)),
        )?;
        Ok(State {
            t: 0.0,
            n: 0,
            u_curr: u0,
            u_prev: None,
            z_curr: c0.add_scaled(-1.0, &delta)?,
        })
    }

    fn forcing_rho(&self, t: f64) -> Option<CellField> {
        self.problem
            .forcing()
            .map(|f| CellField::sample(self.grid.clone(), |x, y| (f.rho)(x, y, t)))
    }

    fn forcing_c(&self, t: f64) -> Option<CellField> {
        self.problem
            .forcing()
            .map(|f| CellField::sample(self.grid.clone(), |x, y| (f.c)(x, y, t)))
    }

    /// Multiplies a cell-wise right-hand side by the cell areas.
    fn weighted(&self, rhs: CellField) -> Vec<f64> {
        let mut v = rhs.into_values();
        v.iter_mut().zip(&self.areas).for_each(|(r, a)| *r *= a);
        v
    }

    fn add_forcing(rhs: CellField, f: Option<CellField>) -> CellField {
        match f {
            Some(f) => rhs.add_scaled(1.0, &f).expect("same grid"),
            None => rhs,
        }
    }

    fn check_level(&self, state: &State) -> Result<()> {
        if state.u_curr.grid() != &self.grid && **state.u_curr.grid() != *self.grid {
            return Err(Error::GridMismatch("state and scheme"));
        }
        Ok(())
    }

    /// Backward-Euler prediction of the density at the first level.
    pub fn predict_system(&self, state: &State) -> Result<LinearSystem> {
        self.check_level(state)?;
        if state.n != 0 {
            return Err(Error::Config("the prediction step applies only at n = 0".into()));
        }
        let tau = self.config.tau;
        let grad0 = gradient(&state.z_curr);
        let matrix = assemble(&self.grid, 1.0 / tau, 1.0, Some((self.config.lambda, &grad0)));
        let mut rhs = state.u_curr.clone();
        rhs.values_mut().iter_mut().for_each(|v| *v /= tau);
        let rhs = Self::add_forcing(rhs, self.forcing_rho(self.config.time(1)));
        Ok(LinearSystem {
            matrix,
            rhs: self.weighted(rhs),
            guess: state.u_curr.values().to_vec(),
        })
    }

    /// Crank-Nicolson chemoattractant solve for the first level, driven by
    /// the predicted density.
    pub fn z_first_system(&self, state: &State, u_bar: &CellField) -> Result<LinearSystem> {
        self.check_level(state)?;
        let tau = self.config.tau;
        let z0 = &state.z_curr;
        if u_bar.grid() != z0.grid() && **u_bar.grid() != **z0.grid() {
            return Err(Error::GridMismatch("predicted density and state"));
        }
        let mut rhs = z0.clone();
        let lz = apply_laplacian(z0);
        for (k, r) in rhs.values_mut().iter_mut().enumerate() {
            *r = (1.0 / tau - 0.5) * z0.values()[k]
                + 0.5 * lz.values()[k]
                + 0.5 * (u_bar.values()[k] + state.u_curr.values()[k]);
        }
        let rhs = Self::add_forcing(rhs, self.forcing_c(self.config.time(1) / 2.0));
        Ok(LinearSystem {
            matrix: self.z_matrix.clone(),
            rhs: self.weighted(rhs),
            guess: z0.values().to_vec(),
        })
    }

    /// Crank-Nicolson density system between `U^n` and `U^{n+1}`, with the
    /// chemotactic flux evaluated against `Z^n` and `Z^{n+1}` respectively.
    fn density_cn_system(
        &self,
        u_old: &CellField,
        z_old: &CellField,
        z_new: &CellField,
        t_half: f64,
        guess: Vec<f64>,
    ) -> LinearSystem {
        let tau = self.config.tau;
        let lambda = self.config.lambda;
        let grad_new = gradient(z_new);
        let grad_old = gradient(z_old);
        let matrix = assemble(&self.grid, 1.0 / tau, 0.5, Some((lambda / 2.0, &grad_new)));
        let lu = apply_laplacian(u_old);
        let cu = apply_chemotaxis(u_old, &grad_old);
        let mut rhs = u_old.clone();
        for (k, r) in rhs.values_mut().iter_mut().enumerate() {
            *r = u_old.values()[k] / tau + 0.5 * lu.values()[k] - 0.5 * lambda * cu.values()[k];
        }
        let rhs = Self::add_forcing(rhs, self.forcing_rho(t_half));
        LinearSystem {
            matrix,
            rhs: self.weighted(rhs),
            guess,
        }
    }

    /// Crank-Nicolson correction of the first density level.
    pub fn correct_system(&self, state: &State, z_new: &CellField) -> Result<LinearSystem> {
        self.check_level(state)?;
        Ok(self.density_cn_system(
            &state.u_curr,
            &state.z_curr,
            z_new,
            self.config.time(1) / 2.0,
            state.u_curr.values().to_vec(),
        ))
    }

    fn extrapolated(state: &State) -> Result<CellField> {
        let prev = state
            .u_prev
            .as_ref()
            .ok_or_else(|| Error::Config("Crank-Nicolson step needs U^{n-1}".into()))?;
        let mut u_star = state.u_curr.clone();
        for (k, v) in u_star.values_mut().iter_mut().enumerate() {
            *v = 1.5 * state.u_curr.values()[k] - 0.5 * prev.values()[k];
        }
        Ok(u_star)
    }

    /// Chemoattractant system of a Crank-Nicolson step (`n >= 1`).
    pub fn cn_z_system(&self, state: &State) -> Result<LinearSystem> {
        self.check_level(state)?;
        let tau = self.config.tau;
        let u_star = Self::extrapolated(state)?;
        let z = &state.z_curr;
        let lz = apply_laplacian(z);
        let mut rhs = z.clone();
        for (k, r) in rhs.values_mut().iter_mut().enumerate() {
            *r = (1.0 / tau - 0.5) * z.values()[k] + 0.5 * lz.values()[k] + u_star.values()[k];
        }
        let t_half = 0.5 * (self.config.time(state.n) + self.config.time(state.n + 1));
        let rhs = Self::add_forcing(rhs, self.forcing_c(t_half));
        Ok(LinearSystem {
            matrix: self.z_matrix.clone(),
            rhs: self.weighted(rhs),
            guess: z.values().to_vec(),
        })
    }

    /// Density system of a Crank-Nicolson step (`n >= 1`) given `Z^{n+1}`.
    pub fn cn_u_system(&self, state: &State, z_new: &CellField) -> Result<LinearSystem> {
        self.check_level(state)?;
        let guess = Self::extrapolated(state)?.into_values();
        let t_half = 0.5 * (self.config.time(state.n) + self.config.time(state.n + 1));
        Ok(self.density_cn_system(&state.u_curr, &state.z_curr, z_new, t_half, guess))
    }

    /// Solves one system. A non-converged chemoattractant solve is an error;
    /// a non-converged density solve is returned as is when its iterate has
    /// already left the finite range or crossed the blow-up threshold, so
    /// that the caller reports blow-up instead of a solver failure.
    fn solve(
        &self,
        system: &LinearSystem,
        symmetric: bool,
        label: &'static str,
    ) -> Result<(CellField, SolveReport)> {
        let opts = self.config.solver_options();
        let solver = if symmetric { cg } else { bicgstab };
        let (x, report) = solver(&system.matrix, &system.rhs, Some(&system.guess), &opts)?;
        let field = CellField::from_values(self.grid.clone(), x)?;
        let blown = !field.is_finite() || field.max_abs() > self.config.blowup_threshold;
        if !report.converged && (symmetric || !blown) {
            return Err(Error::SolverFailed {
                system: label,
                report,
            });
        }
        Ok((field, report))
    }

    pub fn predict_u1(&self, state: &State) -> Result<(CellField, SolveReport)> {
        self.solve(&self.predict_system(state)?, false, "density prediction")
    }

    pub fn solve_z_first(&self, state: &State, u_bar: &CellField) -> Result<(CellField, SolveReport)> {
        self.solve(&self.z_first_system(state, u_bar)?, true, "chemoattractant")
    }

    pub fn correct_u1(&self, state: &State, z_new: &CellField) -> Result<(CellField, SolveReport)> {
        self.solve(&self.correct_system(state, z_new)?, false, "density correction")
    }

    /// Computes level 1 by prediction, chemoattractant solve and correction.
    pub fn first_step(&self, state: &State) -> Result<Advance> {
        let (u_bar, rep_pred) = self.predict_u1(state)?;
        if !rep_pred.converged {
            let z = state.z_curr.clone();
            return self.finish(state, u_bar, z, rep_pred, rep_pred);
        }
        let (z1, rep_z) = self.solve_z_first(state, &u_bar)?;
        let (u1, rep_u) = self.correct_u1(state, &z1)?;
        let mut rep_u_total = rep_u;
        rep_u_total.iterations += rep_pred.iterations;
        self.finish(state, u1, z1, rep_z, rep_u_total)
    }

    /// Advances `n -> n + 1` for `n >= 1`.
    pub fn step_cn(&self, state: &State) -> Result<Advance> {
        if state.n == 0 {
            return Err(Error::Config("Crank-Nicolson step needs n >= 1".into()));
        }
        let (z_new, rep_z) = self.solve(&self.cn_z_system(state)?, true, "chemoattractant")?;
        let (u_new, rep_u) = self.solve(&self.cn_u_system(state, &z_new)?, false, "density")?;
        self.finish(state, u_new, z_new, rep_z, rep_u)
    }

    /// Dispatches to [`Scheme::first_step`] or [`Scheme::step_cn`].
    pub fn step(&self, state: &State) -> Result<Advance> {
        if state.n == 0 {
            self.first_step(state)
        } else {
            self.step_cn(state)
        }
    }

    fn finish(
        &self,
        state: &State,
        u_new: CellField,
        z_new: CellField,
        rep_z: SolveReport,
        rep_u: SolveReport,
    ) -> Result<Advance> {
        let n = state.n + 1;
        let diagnostics = self.diagnostics(n, &u_new, &z_new, Some((rep_z, rep_u)));
        if !u_new.is_finite() || !z_new.is_finite() || u_new.max_abs() > self.config.blowup_threshold
        {
            return Err(Error::BlowUpDetected(Box::new(diagnostics)));
        }
        if !diagnostics.uniqueness_ok
            && !self
                .warned_uniqueness
                .swap(true, std::sync::atomic::Ordering::Relaxed)
        {
            warn!(
                "step {n}: tau = {} violates tau < 4 / (lambda^2 (|dZ|_inf + 1)^2) with |dZ|_inf = {:e}",
                self.config.tau, diagnostics.dz_inf
            );
        }
        Ok(Advance {
            state: State {
                t: self.config.time(n),
                n,
                u_curr: u_new,
                u_prev: Some(state.u_curr.clone()),
                z_curr: z_new,
            },
            diagnostics,
        })
    }

    fn diagnostics(
        &self,
        n: usize,
        u: &CellField,
        z: &CellField,
        reports: Option<(SolveReport, SolveReport)>,
    ) -> StepDiagnostics {
        let dz_inf = gradient(z).inf_norm();
        let (rz, ru) = reports.map_or((None, None), |(a, b)| (Some(a), Some(b)));
        StepDiagnostics {
            n,
            t: self.config.time(n),
            mass: u.mass(),
            u_max: u.max(),
            u_min: u.min(),
            z_max: z.max(),
            argmax_u: u.argmax(),
            solver_iters_z: rz.map_or(0, |r| r.iterations),
            solver_iters_u: ru.map_or(0, |r| r.iterations),
            residual_z: rz.map_or(0.0, |r| r.final_relative_residual),
            residual_u: ru.map_or(0.0, |r| r.final_relative_residual),
            dz_inf,
            uniqueness_ok: !self.config.uniqueness_monitor
                || self.config.uniqueness_condition(dz_inf),
        }
    }

    pub fn initial_diagnostics(&self, state: &State) -> StepDiagnostics {
        self.diagnostics(state.n, &state.u_curr, &state.z_curr, None)
    }

    /// Marches from the initial data to `t_final`, stopping early on blow-up.
    /// Any other step failure is returned wrapped in [`Error::Step`].
    pub fn run(&self) -> Result<RunRecord> {
        self.run_with(|_| Ok(()))
    }

    /// As [`Scheme::run`], calling `observe` on every accepted state
    /// (including the initial one).
    pub fn run_with(&self, mut observe: impl FnMut(&State) -> Result<()>) -> Result<RunRecord> {
        let mut state = self.init_state()?;
        observe(&state)?;
        let initial = self.initial_diagnostics(&state);
        let mut steps = Vec::with_capacity(self.n_steps);
        let mut termination = Termination::Completed;
        for _ in 0..self.n_steps {
            match self.step(&state) {
                Ok(Advance { state: next, diagnostics }) => {
                    state = next;
                    steps.push(diagnostics);
                    observe(&state)?;
                }
                Err(Error::BlowUpDetected(d)) => {
                    termination = Termination::BlowUp { step: d.n, t: d.t };
                    steps.push(*d);
                    break;
                }
                Err(e) => {
                    return Err(Error::Step {
                        step: state.n + 1,
                        source: Box::new(e),
                    })
                }
            }
        }
        Ok(RunRecord {
            initial,
            steps,
            final_state: state,
            termination,
        })
    }
}

/// Error norms of a state against the problem's exact solution at `state.t`.
pub fn error_norms(state: &State, problem: &ProblemSpec) -> Result<ErrorNorms> {
    let exact = problem.exact().ok_or_else(|| {
        Error::Config(format!("problem '{}' has no exact solution", problem.name()))
    })?;
    let t = state.t;
    let grid = state.u_curr.grid().clone();
    let rho = CellField::sample(grid.clone(), |x, y| (exact.rho)(x, y, t));
    let c = CellField::sample(grid.clone(), |x, y| (exact.c)(x, y, t));
    let e_rho = norm_m(&rho.add_scaled(-1.0, &state.u_curr)?);
    let e_c = norm_m(&c.add_scaled(-1.0, &state.z_curr)?);
    let exact_grad = GradientPair::new(
        EdgeFieldX::sample_interior(grid.clone(), |x, y| (exact.c_x)(x, y, t)),
        EdgeFieldY::sample_interior(grid, |x, y| (exact.c_y)(x, y, t)),
    )?;
    let discrete = GradientPair::new(dx(&state.z_curr), dy(&state.z_curr))?;
    let e_gradc = norm_tm(&exact_grad.difference(&discrete)?);
    Ok(ErrorNorms { e_rho, e_c, e_gradc })
}

/// Convenience wrapper: builds the scheme and runs it.
pub fn run(problem: &ProblemSpec, grid: GridRef, config: SchemeConfig) -> Result<RunRecord> {
    Scheme::new(problem, grid, config)?.run()
}

/// Shares one grid between several runs.
pub fn share(grid: crate::grid::StaggeredGrid2D) -> GridRef {
    Arc::new(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridFamily, StaggeredGrid2D};
    use crate::linalg::dense_solve;

    fn grid(family: GridFamily, m: usize) -> GridRef {
        Arc::new(StaggeredGrid2D::build(family, m, [0.0, 1.0, 0.0, 1.0]).unwrap())
    }

    fn bump(lambda: f64) -> ProblemSpec {
        let c0: crate::problems::SpatialFn = Arc::new(|x: f64, y: f64| (x * x - x).powi(2) + y);
        ProblemSpec::new(
            "bump",
            [0.0, 1.0, 0.0, 1.0],
            lambda,
            Arc::new(|x: f64, y: f64| 2.0 + (3.0 * x).cos() * (2.0 * y).sin()),
            c0,
        )
        .unwrap()
        .with_c0_second_derivatives(
            Arc::new(|x: f64, _| 12.0 * x * x - 12.0 * x + 2.0),
            Arc::new(|_, _| 0.0),
        )
    }

    #[test]
    fn step_count_validation() {
        assert_eq!(SchemeConfig::new(1.0, 0.1, 1.0).n_steps().unwrap(), 10);
        assert_eq!(SchemeConfig::new(1.0, 1e-6, 6e-5).n_steps().unwrap(), 60);
        assert!(SchemeConfig::new(1.0, 0.3, 1.0).n_steps().is_err());
        assert!(SchemeConfig::new(1.0, 0.0, 1.0).n_steps().is_err());
        assert!(SchemeConfig::new(-1.0, 0.1, 1.0).n_steps().is_err());
    }

    #[test]
    fn constant_state_is_steady() {
        let p = ProblemSpec::constant([0.0, 1.0, 0.0, 1.0], 1.0, 3.0, 3.0).unwrap();
        let g = grid(GridFamily::Random { beta: 0.3, seed: 4 }, 10);
        let rec = run(&p, g, SchemeConfig::new(1.0, 0.05, 1.0)).unwrap();
        assert_eq!(rec.steps.len(), 20);
        for v in rec.final_state.u_curr.values().iter().chain(rec.final_state.z_curr.values()) {
            assert!((v - 3.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn chemoattractant_decays_without_density() {
        let p = ProblemSpec::constant([0.0, 1.0, 0.0, 1.0], 1.0, 0.0, 2.0).unwrap();
        let g = grid(GridFamily::Uniform, 6);
        let tau = 0.1;
        let s = Scheme::new(&p, g, SchemeConfig::new(1.0, tau, 0.1)).unwrap();
        let adv = s.step(&s.init_state().unwrap()).unwrap();
        let expected = 2.0 * (1.0 / tau - 0.5) / (1.0 / tau + 0.5);
        for v in adv.state.z_curr.values() {
            assert!((v - expected).abs() < 1e-12);
        }
        assert!(adv.state.u_curr.values().iter().all(|v| v.abs() < 1e-14));
    }

    /// With `lambda = 0` the density obeys Crank-Nicolson for the heat
    /// equation; compare against a dense Kronecker-sum Laplacian.
    #[test]
    fn zero_sensitivity_reduces_to_heat_equation() {
        let g = grid(GridFamily::Random { beta: 0.25, seed: 8 }, 5);
        let p = bump(0.0);
        let tau = 0.02;
        let s = Scheme::new(&p, g.clone(), SchemeConfig::new(0.0, tau, 0.06)).unwrap();
        let (nx, ny) = (g.nx(), g.ny());
        let n = nx * ny;
        let lap1d = |w: &[f64], d: &[f64]| {
            let m = w.len();
            let mut a = vec![vec![0.0; m]; m];
            for e in 1..m {
                // flux between e-1 and e
                let k = 1.0 / d[e - 1];
                a[e - 1][e - 1] -= k / w[e - 1];
                a[e - 1][e] += k / w[e - 1];
                a[e][e] -= k / w[e];
                a[e][e - 1] += k / w[e];
            }
            a
        };
        let lx = lap1d(g.x_axis().cell_widths(), g.x_axis().dual_widths());
        let ly = lap1d(g.y_axis().cell_widths(), g.y_axis().dual_widths());
        let mut lap = vec![vec![0.0; n]; n];
        for j in 0..ny {
            for i in 0..nx {
                let r = j * nx + i;
                for i2 in 0..nx {
                    lap[r][j * nx + i2] += lx[i][i2];
                }
                for j2 in 0..ny {
                    lap[r][j2 * nx + i] += ly[j][j2];
                }
            }
        }
        let cn = |u: &[f64]| {
            let a: Vec<Vec<f64>> = (0..n)
                .map(|r| (0..n).map(|c| f64::from(r == c) / tau - 0.5 * lap[r][c]).collect())
                .collect();
            let b: Vec<f64> = (0..n)
                .map(|r| u[r] / tau + 0.5 * (0..n).map(|c| lap[r][c] * u[c]).sum::<f64>())
                .collect();
            dense_solve(&a, &b).unwrap()
        };
        let mut state = s.init_state().unwrap();
        let mut oracle = state.u_curr.values().to_vec();
        for _ in 0..3 {
            state = s.step(&state).unwrap().state;
            oracle = cn(&oracle);
            for (a, b) in state.u_curr.values().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn chemoattractant_matrix_is_symmetric() {
        let s = Scheme::new(
            &bump(1.0),
            grid(GridFamily::Random { beta: 0.4, seed: 2 }, 9),
            SchemeConfig::new(1.0, 0.01, 0.01),
        )
        .unwrap();
        assert!(s.z_matrix().is_symmetric(0.0));
    }

    #[test]
    fn mass_is_conserved_on_random_grid() {
        let g = grid(GridFamily::Random { beta: 0.4, seed: 3 }, 16);
        let rec = run(&bump(1.0), g, SchemeConfig::new(1.0, 0.01, 0.2)).unwrap();
        assert_eq!(rec.termination, Termination::Completed);
        assert!(rec.max_relative_mass_drift() < 1e-11, "{}", rec.max_relative_mass_drift());
    }

    #[test]
    fn single_step_run() {
        let rec = run(&bump(1.0), grid(GridFamily::Uniform, 6), SchemeConfig::new(1.0, 0.1, 0.1)).unwrap();
        assert_eq!(rec.steps.len(), 1);
        assert_eq!(rec.final_state.n, 1);
        assert!((rec.final_state.t - 0.1).abs() < 1e-15);
        assert!(rec.final_state.u_prev.is_some());
    }

    #[test]
    fn runs_are_bitwise_reproducible() {
        let go = || {
            let g = grid(GridFamily::Random { beta: 0.3, seed: 12 }, 12);
            run(&bump(1.0), g, SchemeConfig::new(1.0, 0.02, 0.1)).unwrap()
        };
        let (a, b) = (go(), go());
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.final_state.u_curr, b.final_state.u_curr);
    }

    #[test]
    fn solutions_satisfy_their_systems() {
        let g = grid(GridFamily::Random { beta: 0.3, seed: 1 }, 8);
        let s = Scheme::new(&bump(1.0), g, SchemeConfig::new(1.0, 0.01, 0.05)).unwrap();
        let s0 = s.init_state().unwrap();
        let s1 = s.step(&s0).unwrap().state;
        let zsys = s.cn_z_system(&s1).unwrap();
        let s2 = s.step(&s1).unwrap().state;
        let usys = s.cn_u_system(&s1, &s2.z_curr).unwrap();
        for (sys, x) in [(zsys, &s2.z_curr), (usys, &s2.u_curr)] {
            let ax = sys.matrix.matvec(x.values()).unwrap();
            let res: f64 = ax.iter().zip(&sys.rhs).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let bn: f64 = sys.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(res <= 1e-11 * bn);
        }
    }

    #[test]
    fn blow_up_threshold_halts_run() {
        let mut cfg = SchemeConfig::new(1.0, 0.01, 0.1);
        cfg.blowup_threshold = 2.5;
        let rec = run(&bump(1.0), grid(GridFamily::Uniform, 8), cfg).unwrap();
        let Termination::BlowUp { step, .. } = rec.termination else {
            panic!("expected blow-up");
        };
        assert_eq!(rec.steps.len(), step);
        assert_eq!(rec.final_state.n, step - 1);
        assert!(rec.steps.last().unwrap().u_max > 2.5);
    }

    #[test]
    fn missing_data_is_reported() {
        let p = ProblemSpec::new(
            "bare",
            [0.0, 1.0, 0.0, 1.0],
            1.0,
            Arc::new(|_, _| 1.0),
            Arc::new(|_, _| 1.0),
        )
        .unwrap();
        let s = Scheme::new(&p, grid(GridFamily::Uniform, 4), SchemeConfig::new(1.0, 0.1, 0.1)).unwrap();
        assert!(matches!(s.init_state(), Err(Error::Config(_))));
        let st = Scheme::new(&bump(1.0), grid(GridFamily::Uniform, 4), SchemeConfig::new(1.0, 0.1, 0.1))
            .unwrap()
            .init_state()
            .unwrap();
        assert!(matches!(error_norms(&st, &p), Err(Error::Config(_))));
    }
}
