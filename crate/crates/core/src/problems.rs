//! Analytic problem definitions: initial data, and for manufactured problems
//! the exact solution with the matching source terms.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type SpatialFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Exact `rho`, `c` and the two components of `grad c`, as functions of
/// `(x, y, t)`.
#[derive(Clone)]
pub struct ExactSolution {
    pub rho: SpaceTimeFn,
    pub c: SpaceTimeFn,
    pub c_x: SpaceTimeFn,
    pub c_y: SpaceTimeFn,
}

/// Source terms added to the right-hand sides of the density and
/// chemoattractant equations.
#[derive(Clone)]
pub struct Forcing {
    pub rho: SpaceTimeFn,
    pub c: SpaceTimeFn,
}

#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    domain: [f64; 4],
    lambda: f64,
    rho0: SpatialFn,
    c0: SpatialFn,
    c0_xx: Option<SpatialFn>,
    c0_yy: Option<SpatialFn>,
    exact: Option<ExactSolution>,
    forcing: Option<Forcing>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("lambda", &self.lambda)
            .field("has_c0_derivatives", &self.c0_xx.is_some())
            .field("has_exact", &self.exact.is_some())
            .field("has_forcing", &self.forcing.is_some())
            .finish()
    }
}

/// Names accepted by [`ProblemSpec::by_name`].
pub const BUILTIN_PROBLEMS: [&str; 5] = [
    "mms_accuracy",
    "global_existence",
    "blowup_supercritical",
    "blowup_center",
    "blowup_corner",
];

impl ProblemSpec {
    /// Builds a problem from initial data. `lambda` must be non-negative and
    /// the domain non-degenerate.
    pub fn new(
        name: impl Into<String>,
        domain: [f64; 4],
        lambda: f64,
        rho0: SpatialFn,
        c0: SpatialFn,
    ) -> Result<Self> {
        let [x0, x1, y0, y1] = domain;
        if !(x1 > x0 && y1 > y0) || domain.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("invalid domain {domain:?}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::domain(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            name: name.into(),
            domain,
            lambda,
            rho0,
            c0,
            c0_xx: None,
            c0_yy: None,
            exact: None,
            forcing: None,
        })
    }

    pub fn with_c0_second_derivatives(mut self, xx: SpatialFn, yy: SpatialFn) -> Self {
        self.c0_xx = Some(xx);
        self.c0_yy = Some(yy);
        self
    }

    /// Attaches an exact solution together with the forcing that makes it
    /// one; the two are only accepted as a pair.
    pub fn with_manufactured(mut self, exact: ExactSolution, forcing: Forcing) -> Self {
        self.exact = Some(exact);
        self.forcing = Some(forcing);
        self
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "mms_accuracy" => mms_accuracy(),
            "global_existence" => global_existence(),
            "blowup_supercritical" => blowup_supercritical(),
            "blowup_center" => blowup_center(),
            "blowup_corner" => blowup_corner(),
            _ => return None,
        })
    }

    /// Spatially constant `rho = rho_value`, `c = c_value`, no forcing.
    pub fn constant(domain: [f64; 4], lambda: f64, rho_value: f64, c_value: f64) -> Result<Self> {
        Ok(Self::new(
            "constant",
            domain,
            lambda,
            Arc::new(move |_, _| rho_value),
            Arc::new(move |_, _| c_value),
        )?
        .with_c0_second_derivatives(Arc::new(|_, _| 0.0), Arc::new(|_, _| 0.0)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> [f64; 4] {
        self.domain
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho0(&self, x: f64, y: f64) -> f64 {
        (self.rho0)(x, y)
    }

    pub fn c0(&self, x: f64, y: f64) -> f64 {
        (self.c0)(x, y)
    }

    pub fn c0_second_derivatives(&self) -> Option<(&SpatialFn, &SpatialFn)> {
        self.c0_xx.as_ref().zip(self.c0_yy.as_ref())
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    pub fn forcing(&self) -> Option<&Forcing> {
        self.forcing.as_ref()
    }
}

/// `amp * exp(-rate * ((x - cx)^2 + (y - cy)^2))` with its second derivatives.
struct Gaussian {
    amp: f64,
    rate: f64,
    cx: f64,
    cy: f64,
}

impl Gaussian {
    fn value(&self) -> SpatialFn {
        let Gaussian { amp, rate, cx, cy } = *self;
        Arc::new(move |x, y| amp * (-rate * ((x - cx).powi(2) + (y - cy).powi(2))).exp())
    }

    fn xx(&self) -> SpatialFn {
        let Gaussian { amp, rate, cx, cy } = *self;
        Arc::new(move |x, y| {
            let g = amp * (-rate * ((x - cx).powi(2) + (y - cy).powi(2))).exp();
            g * (4.0 * rate * rate * (x - cx).powi(2) - 2.0 * rate)
        })
    }

    fn yy(&self) -> SpatialFn {
        let Gaussian { amp, rate, cx, cy } = *self;
        Arc::new(move |x, y| {
            let g = amp * (-rate * ((x - cx).powi(2) + (y - cy).powi(2))).exp();
            g * (4.0 * rate * rate * (y - cy).powi(2) - 2.0 * rate)
        })
    }
}

fn gaussian_problem(name: &str, domain: [f64; 4], rho: Gaussian, c: Gaussian) -> ProblemSpec {
    ProblemSpec::new(name, domain, 1.0, rho.value(), c.value())
        .expect("built-in problem is valid")
        .with_c0_second_derivatives(c.xx(), c.yy())
}

// phi(s) = (s^2 - s)^2 and its first two derivatives
fn phi(s: f64) -> f64 {
    (s * s - s).powi(2)
}

fn phi_d1(s: f64) -> f64 {
    2.0 * (s * s - s) * (2.0 * s - 1.0)
}

fn phi_d2(s: f64) -> f64 {
    12.0 * s * s - 12.0 * s + 2.0
}

/// Manufactured accuracy test on `(0, 1)^2` with `lambda = 1`:
/// `rho = c = P(x, y) t`, `P = (x^2 - x)^2 (y^2 - y)^2`.
///
/// With `lap P = phi''(x) phi(y) + phi(x) phi''(y)` the source terms are
///
/// ```text
/// f_rho = P - t lap P + lambda t^2 (|grad P|^2 + P lap P)
/// f_c   = P - t lap P
/// ```
///
/// since `div(rho grad c) = t^2 (grad P . grad P + P lap P)` and the decay
/// and production terms of the `c` equation cancel.
pub fn mms_accuracy() -> ProblemSpec {
    let lambda = 1.0;
    let p = |x: f64, y: f64| phi(x) * phi(y);
    let lap = |x: f64, y: f64| phi_d2(x) * phi(y) + phi(x) * phi_d2(y);
    let exact = ExactSolution {
        rho: Arc::new(move |x, y, t| p(x, y) * t),
        c: Arc::new(move |x, y, t| p(x, y) * t),
        c_x: Arc::new(|x, y, t| phi_d1(x) * phi(y) * t),
        c_y: Arc::new(|x, y, t| phi(x) * phi_d1(y) * t),
    };
    let forcing = Forcing {
        rho: Arc::new(move |x, y, t| {
            let (px, py) = (phi_d1(x) * phi(y), phi(x) * phi_d1(y));
            let (pv, lp) = (p(x, y), lap(x, y));
            pv - t * lp + lambda * t * t * (px * px + py * py + pv * lp)
        }),
        c: Arc::new(move |x, y, t| p(x, y) - t * lap(x, y)),
    };
    ProblemSpec::new(
        "mms_accuracy",
        [0.0, 1.0, 0.0, 1.0],
        lambda,
        Arc::new(|_, _| 0.0),
        Arc::new(|_, _| 0.0),
    )
    .expect("built-in problem is valid")
    .with_c0_second_derivatives(Arc::new(|_, _| 0.0), Arc::new(|_, _| 0.0))
    .with_manufactured(exact, forcing)
}

/// Sub-critical Gaussian bump on `(0, 1)^2`, initial mass about 24.67.
/// `c0 = 25 exp(-2.5 r^2)`.
pub fn global_existence() -> ProblemSpec {
    gaussian_problem(
        "global_existence",
        [0.0, 1.0, 0.0, 1.0],
        Gaussian { amp: 50.0, rate: 5.0, cx: 0.5, cy: 0.5 },
        Gaussian { amp: 25.0, rate: 2.5, cx: 0.5, cy: 0.5 },
    )
}

/// Super-critical bump on `(-1, 1)^2`, initial mass about 27.23.
pub fn blowup_supercritical() -> ProblemSpec {
    gaussian_problem(
        "blowup_supercritical",
        [-1.0, 1.0, -1.0, 1.0],
        Gaussian { amp: 130.0, rate: 15.0, cx: 0.0, cy: 0.0 },
        Gaussian { amp: 13.0, rate: 2.0, cx: 0.0, cy: 0.0 },
    )
}

/// Sharp bump collapsing at the center of `(0, 1)^2`.
pub fn blowup_center() -> ProblemSpec {
    gaussian_problem(
        "blowup_center",
        [0.0, 1.0, 0.0, 1.0],
        Gaussian { amp: 1000.0, rate: 100.0, cx: 0.5, cy: 0.5 },
        Gaussian { amp: 500.0, rate: 50.0, cx: 0.5, cy: 0.5 },
    )
}

/// Off-center bump on `(-0.5, 0.5)^2` that drifts into the corner
/// `(0.5, 0.5)` and collapses there. `c0 = 0`.
pub fn blowup_corner() -> ProblemSpec {
    gaussian_problem(
        "blowup_corner",
        [-0.5, 0.5, -0.5, 0.5],
        Gaussian { amp: 1000.0, rate: 100.0, cx: 0.15, cy: 0.15 },
        Gaussian { amp: 0.0, rate: 0.0, cx: 0.0, cy: 0.0 },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite adaptive Simpson on [a, b].
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
    }

    fn mass(p: &ProblemSpec) -> f64 {
        let [x0, x1, y0, y1] = p.domain();
        simpson(&|y| simpson(&|x| p.rho0(x, y), x0, x1, 1e-11), y0, y1, 1e-9)
    }

    #[test]
    fn initial_masses() {
        assert!((mass(&global_existence()) - 24.67).abs() < 0.005);
        assert!((mass(&blowup_supercritical()) - 27.23).abs() < 0.005);
        assert!(mass(&global_existence()) < 8.0 * std::f64::consts::PI);
        assert!(mass(&blowup_supercritical()) > 8.0 * std::f64::consts::PI);
    }

    #[test]
    fn peaks() {
        assert_eq!(global_existence().rho0(0.5, 0.5), 50.0);
        assert_eq!(global_existence().c0(0.5, 0.5), 25.0);
        assert_eq!(blowup_supercritical().rho0(0.0, 0.0), 130.0);
        assert_eq!(blowup_supercritical().c0(0.0, 0.0), 13.0);
        assert_eq!(blowup_center().rho0(0.5, 0.5), 1000.0);
        assert_eq!(blowup_center().c0(0.5, 0.5), 500.0);
        let corner = blowup_corner();
        assert_eq!(corner.rho0(0.15, 0.15), 1000.0);
        assert_eq!(corner.c0(0.3, -0.2), 0.0);
        let (xx, yy) = corner.c0_second_derivatives().unwrap();
        assert_eq!(xx(0.1, 0.1), 0.0);
        assert_eq!(yy(0.4, -0.1), 0.0);
    }

    #[test]
    fn mms_initial_data_and_neumann() {
        let p = mms_accuracy();
        let exact = p.exact().unwrap();
        assert_eq!((exact.rho)(0.3, 0.7, 0.0), 0.0);
        for s in [0.0, 0.2, 0.9, 1.0] {
            assert_eq!((exact.c_x)(0.0, s, 1.0), 0.0);
            assert_eq!((exact.c_x)(1.0, s, 1.0), 0.0);
            assert_eq!((exact.c_y)(s, 0.0, 1.0), 0.0);
            assert_eq!((exact.c_y)(s, 1.0, 1.0), 0.0);
        }
    }

    #[test]
    fn gaussian_second_derivatives_match_finite_differences() {
        for p in [global_existence(), blowup_supercritical(), blowup_center()] {
            let (xx, yy) = p.c0_second_derivatives().unwrap();
            let [x0, x1, y0, y1] = p.domain();
            let h = 1e-4;
            for k in 1..8 {
                let x = x0 + (x1 - x0) * k as f64 / 8.3;
                let y = y0 + (y1 - y0) * (9 - k) as f64 / 9.1;
                let fd_xx = (p.c0(x + h, y) - 2.0 * p.c0(x, y) + p.c0(x - h, y)) / (h * h);
                let fd_yy = (p.c0(x, y + h) - 2.0 * p.c0(x, y) + p.c0(x, y - h)) / (h * h);
                let scale = xx(x, y).abs().max(1.0);
                assert!((fd_xx - xx(x, y)).abs() <= 1e-4 * scale);
                assert!((fd_yy - yy(x, y)).abs() <= 1e-4 * yy(x, y).abs().max(1.0));
            }
        }
    }

    /// Residuals of the continuous equations evaluated with central finite
    /// differences of the exact fields.
    fn fd_residuals(p: &ProblemSpec, x: f64, y: f64, t: f64) -> (f64, f64) {
        let e = p.exact().unwrap();
        let h = 1e-4;
        let rho = |x: f64, y: f64| (e.rho)(x, y, t);
        let c = |x: f64, y: f64| (e.c)(x, y, t);
        let lap = |f: &dyn Fn(f64, f64) -> f64| {
            (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h)
        };
        let rho_t = ((e.rho)(x, y, t + h) - (e.rho)(x, y, t - h)) / (2.0 * h);
        let c_t = ((e.c)(x, y, t + h) - (e.c)(x, y, t - h)) / (2.0 * h);
        // div(rho grad c) via fluxes at half points
        let flux_x = |xs: f64| rho(xs, y) * (c(xs + h / 2.0, y) - c(xs - h / 2.0, y)) / h;
        let flux_y = |ys: f64| rho(x, ys) * (c(x, ys + h / 2.0) - c(x, ys - h / 2.0)) / h;
        let div = (flux_x(x + h / 2.0) - flux_x(x - h / 2.0)) / h
            + (flux_y(y + h / 2.0) - flux_y(y - h / 2.0)) / h;
        let r_rho = rho_t - lap(&rho) + p.lambda() * div;
        let r_c = c_t - lap(&c) + c(x, y) - rho(x, y);
        (r_rho, r_c)
    }

    #[test]
    fn manufactured_forcing_matches_residual_oracle() {
        let p = mms_accuracy();
        let f = p.forcing().unwrap();
        let mut seed = 17u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let (x, y, t) = (0.05 + 0.9 * next(), 0.05 + 0.9 * next(), 0.1 + 0.9 * next());
            let (r_rho, r_c) = fd_residuals(&p, x, y, t);
            let (f_rho, f_c) = ((f.rho)(x, y, t), (f.c)(x, y, t));
            assert!((r_rho - f_rho).abs() <= 1e-6 * f_rho.abs().max(1e-3), "{r_rho} vs {f_rho}");
            assert!((r_c - f_c).abs() <= 1e-6 * f_c.abs().max(1e-3), "{r_c} vs {f_c}");
        }
        // the centre point called out explicitly
        let (_, r_c) = fd_residuals(&p, 0.5, 0.5, 1.0);
        let f_c = (f.c)(0.5, 0.5, 1.0);
        assert!((r_c - f_c).abs() <= 1e-7 * f_c.abs(), "{r_c} vs {f_c}");
    }

    #[test]
    fn registry_round_trip() {
        for name in BUILTIN_PROBLEMS {
            let p = ProblemSpec::by_name(name).unwrap();
            assert_eq!(p.name(), name);
            assert!(p.c0_second_derivatives().is_some());
            assert_eq!(p.exact().is_some(), p.forcing().is_some());
            let [x0, x1, y0, y1] = p.domain();
            for k in 0..=10 {
                let s = k as f64 / 10.0;
                let (x, y) = (x0 + s * (x1 - x0), y0 + (1.0 - s) * (y1 - y0));
                assert!(p.rho0(x, y).is_finite() && p.c0(x, y).is_finite());
            }
        }
        assert!(ProblemSpec::by_name("nope").is_none());
    }

    #[test]
    fn invalid_definitions_rejected() {
        let zero: SpatialFn = Arc::new(|_, _| 0.0);
        assert!(ProblemSpec::new("x", [0.0, 0.0, 0.0, 1.0], 1.0, zero.clone(), zero.clone()).is_err());
        assert!(ProblemSpec::new("x", [0.0, 1.0, 0.0, 1.0], -1.0, zero.clone(), zero).is_err());
    }
}
