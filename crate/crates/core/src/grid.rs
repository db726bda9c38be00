//! One-dimensional axes and tensor-product staggered grids.
//!
//! An axis of `n` cells stores its `n + 1` primal points (cell faces), the
//! `n` cell centers, the `n` cell widths and the `n - 1` dual widths (the
//! distances between neighbouring centers). Indices are 0-based throughout:
//! cell `i` spans `[primal[i], primal[i + 1]]`.
//!
//! All geometry is computed once at construction and never mutated.

use std::io::Write;

use rand_pcg::rand_core::Rng;
use rand_pcg::Pcg64;

use crate::error::{Error, Result};

/// Sub-seed offset applied to the y axis of a randomly perturbed grid so the
/// two axes draw from independent PCG streams.
pub const Y_AXIS_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis1D {
    primal: Vec<f64>,
    centers: Vec<f64>,
    cell_widths: Vec<f64>,
    dual_widths: Vec<f64>,
}

impl Axis1D {
    /// Builds an axis from its primal points. The points must be finite and
    /// strictly increasing, with at least two cells.
    pub fn from_primal(primal: Vec<f64>) -> Result<Self> {
        if primal.len() < 3 {
            return Err(Error::domain(format!(
                "an axis needs at least 2 cells, got {}",
                primal.len().saturating_sub(1)
            )));
        }
        if let Some(k) = primal.iter().position(|p| !p.is_finite()) {
            return Err(Error::domain(format!("primal point {k} is not finite")));
        }
        if let Some(k) = primal.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::domain(format!(
                "primal points not strictly increasing at index {k}: {} >= {}",
                primal[k],
                primal[k + 1]
            )));
        }

        let centers: Vec<f64> = primal.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        let cell_widths: Vec<f64> = primal.windows(2).map(|w| w[1] - w[0]).collect();
        let dual_widths: Vec<f64> = cell_widths
            .windows(2)
            .map(|w| (w[0] + w[1]) / 2.0)
            .collect();

        Ok(Self {
            primal,
            centers,
            cell_widths,
            dual_widths,
        })
    }

    /// Equal cells of width `(hi - lo) / n`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        check_interval(lo, hi, n)?;
        Self::from_primal(uniform_points(lo, hi, n))
    }

    /// Uniform points with every interior point shifted by
    /// `beta * h * (2u - 1)`, `u` uniform on `[0, 1)`.
    ///
    /// The draws come from a PCG-64 (`Pcg64`, 128-bit state XSL-RR output)
    /// seeded with [`rand_pcg::rand_core::SeedableRng::seed_from_u64`]; each
    /// 64-bit output `w` is mapped to `u = (w >> 11) * 2^-53`. One draw is
    /// consumed per interior point, in increasing index order.
    ///
    /// `beta` must lie in `[0, 0.5]`. Since `u < 1`, neighbouring widths are
    /// `h (1 + 2 beta (u_{i+1} - u_i)) > 0` for every such `beta`.
    pub fn random_perturbed(lo: f64, hi: f64, n: usize, beta: f64, seed: u64) -> Result<Self> {
        check_interval(lo, hi, n)?;
        if !(0.0..=0.5).contains(&beta) {
            return Err(Error::domain(format!(
                "perturbation beta must lie in [0, 0.5], got {beta}"
            )));
        }
        let h = (hi - lo) / n as f64;
        let mut rng = <Pcg64 as rand_pcg::rand_core::SeedableRng>::seed_from_u64(seed);
        let mut primal = uniform_points(lo, hi, n);
        for p in &mut primal[1..n] {
            let u = unit_draw(&mut rng);
            *p += beta * h * (-1.0 + 2.0 * u);
        }
        Self::from_primal(primal)
    }

    /// Quadratically clustered toward `1/2` on `(0, 1)`:
    /// `x = 1/2 ± i^2 / (2 (n/2 + 1)^2)` for `i = 0, ..., n/2 + 1`.
    ///
    /// The formula's index range runs one step past each end of `n` cells, so
    /// the axis has `n + 2` cells and its extreme points are exactly `0` and
    /// `1`.
    pub fn middle_refined(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::domain(format!(
                "middle refinement needs an even cell count >= 4, got {n}"
            )));
        }
        let m = (n / 2 + 1) as i64;
        let denom = (2 * m * m) as f64;
        let primal = (-m..=m)
            .map(|i| {
                let offset = (i * i) as f64 / denom;
                if i < 0 {
                    0.5 - offset
                } else {
                    0.5 + offset
                }
            })
            .collect();
        Self::from_primal(primal)
    }

    /// Clustered toward `+1/2` on `(-1/2, 1/2)`:
    /// `primal[n - i] = 1/2 - (i / n)^(3/2)`.
    pub fn corner_refined(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!(
                "corner refinement needs at least 2 cells, got {n}"
            )));
        }
        let nf = n as f64;
        let primal = (0..=n)
            .map(|k| {
                let i = (n - k) as f64;
                0.5 - (i / nf).powf(1.5)
            })
            .collect();
        Self::from_primal(primal)
    }

    /// Affine image of this axis on `[lo, hi]`.
    pub fn remapped(&self, lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi, self.n_cells())?;
        let (a, b) = (self.lo(), self.hi());
        let n = self.n_cells();
        let scale = (hi - lo) / (b - a);
        let primal = self
            .primal
            .iter()
            .enumerate()
            .map(|(k, &p)| match k {
                0 => lo,
                k if k == n => hi,
                _ => lo + (p - a) * scale,
            })
            .collect();
        Self::from_primal(primal)
    }

    pub fn n_cells(&self) -> usize {
        self.cell_widths.len()
    }

    pub fn lo(&self) -> f64 {
        self.primal[0]
    }

    pub fn hi(&self) -> f64 {
        self.primal[self.primal.len() - 1]
    }

    pub fn primal(&self) -> &[f64] {
        &self.primal
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn cell_widths(&self) -> &[f64] {
        &self.cell_widths
    }

    pub fn dual_widths(&self) -> &[f64] {
        &self.dual_widths
    }

    pub fn max_width(&self) -> f64 {
        self.cell_widths.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_width(&self) -> f64 {
        self.cell_widths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes the primal points as a one-column CSV with header `primal`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "primal")?;
        for p in &self.primal {
            writeln!(out, "{p:e}")?;
        }
        Ok(())
    }
}

fn check_interval(lo: f64, hi: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 cells, got {n}")));
    }
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::domain(format!("invalid interval ({lo}, {hi})")));
    }
    Ok(())
}

fn uniform_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..=n)
        .map(|i| if i == n { hi } else { lo + i as f64 * h })
        .collect()
}

fn unit_draw(rng: &mut Pcg64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Which construction produced an axis pair; carried along for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridFamily {
    Uniform,
    Random { beta: f64, seed: u64 },
    Middle,
    Corner,
}

/// Tensor product of two axes. Cell `(i, j)` is centered at
/// `(x_axis.centers()[i], y_axis.centers()[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredGrid2D {
    x_axis: Axis1D,
    y_axis: Axis1D,
    regularity_ratio: f64,
}

impl StaggeredGrid2D {
    pub fn new(x_axis: Axis1D, y_axis: Axis1D) -> Self {
        let h = x_axis.max_width().max(y_axis.max_width());
        let regularity_ratio = (h / x_axis.min_width()).max(h / y_axis.min_width());
        Self {
            x_axis,
            y_axis,
            regularity_ratio,
        }
    }

    /// Builds an `m x m` grid of the given family on `[x_lo, x_hi] x [y_lo, y_hi]`.
    ///
    /// Middle and corner refinements are constructed on their canonical
    /// intervals and then mapped affinely onto the requested domain. Random
    /// grids use `seed` for x and `seed + Y_AXIS_SEED_OFFSET` (wrapping) for y.
    pub fn build(family: GridFamily, m: usize, domain: [f64; 4]) -> Result<Self> {
        let [x_lo, x_hi, y_lo, y_hi] = domain;
        let (x, y) = match family {
            GridFamily::Uniform => (
                Axis1D::uniform(x_lo, x_hi, m)?,
                Axis1D::uniform(y_lo, y_hi, m)?,
            ),
            GridFamily::Random { beta, seed } => (
                Axis1D::random_perturbed(x_lo, x_hi, m, beta, seed)?,
                Axis1D::random_perturbed(
                    y_lo,
                    y_hi,
                    m,
                    beta,
                    seed.wrapping_add(Y_AXIS_SEED_OFFSET),
                )?,
            ),
            GridFamily::Middle => {
                let base = Axis1D::middle_refined(m)?;
                (base.remapped(x_lo, x_hi)?, base.remapped(y_lo, y_hi)?)
            }
            GridFamily::Corner => {
                let base = Axis1D::corner_refined(m)?;
                (base.remapped(x_lo, x_hi)?, base.remapped(y_lo, y_hi)?)
            }
        };
        Ok(Self::new(x, y))
    }

    pub fn x_axis(&self) -> &Axis1D {
        &self.x_axis
    }

    pub fn y_axis(&self) -> &Axis1D {
        &self.y_axis
    }

    pub fn nx(&self) -> usize {
        self.x_axis.n_cells()
    }

    pub fn ny(&self) -> usize {
        self.y_axis.n_cells()
    }

    pub fn n_cells(&self) -> usize {
        self.nx() * self.ny()
    }

    /// Flattened index of cell `(i, j)`, with `i` running fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    /// `sigma = h / min spacing` over both axes, where `h` is the largest width.
    pub fn regularity_ratio(&self) -> f64 {
        self.regularity_ratio
    }

    /// Largest cell width over both axes.
    pub fn h(&self) -> f64 {
        self.x_axis.max_width().max(self.y_axis.max_width())
    }

    pub fn domain(&self) -> [f64; 4] {
        [
            self.x_axis.lo(),
            self.x_axis.hi(),
            self.y_axis.lo(),
            self.y_axis.hi(),
        ]
    }

    pub fn cell_area(&self, i: usize, j: usize) -> f64 {
        self.x_axis.cell_widths[i] * self.y_axis.cell_widths[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_axis_invariants(axis: &Axis1D, lo: f64, hi: f64) {
        let p = axis.primal();
        assert_eq!(p[0], lo);
        assert_eq!(p[p.len() - 1], hi);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        for i in 0..axis.n_cells() {
            assert_eq!(axis.centers()[i], (p[i] + p[i + 1]) / 2.0);
            assert_eq!(axis.cell_widths()[i], p[i + 1] - p[i]);
            assert!(axis.cell_widths()[i] > 0.0);
        }
        for i in 0..axis.n_cells() - 1 {
            let w = axis.cell_widths();
            assert_eq!(axis.dual_widths()[i], (w[i] + w[i + 1]) / 2.0);
        }
        let total: f64 = axis.cell_widths().iter().sum();
        assert!(((total - (hi - lo)) / (hi - lo)).abs() <= 1e-13);
    }

    #[test]
    fn uniform_quarter_cells() {
        let a = Axis1D::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(a.primal(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(a.centers(), &[0.125, 0.375, 0.625, 0.875]);
        assert_axis_invariants(&a, 0.0, 1.0);
    }

    #[test]
    fn uniform_tenth_cells() {
        let a = Axis1D::uniform(0.0, 1.0, 10).unwrap();
        for w in a.cell_widths() {
            assert!(((w - 0.1) / 0.1).abs() <= 1e-15 * 10.0, "{w}");
        }
        let b = Axis1D::uniform(-1.0, 1.0, 2).unwrap();
        assert_eq!(b.centers(), &[-0.5, 0.5]);
    }

    #[test]
    fn uniform_rejects_bad_input() {
        assert!(matches!(Axis1D::uniform(0.0, 1.0, 1), Err(Error::Domain(_))));
        assert!(matches!(Axis1D::uniform(1.0, 1.0, 4), Err(Error::Domain(_))));
        assert!(matches!(Axis1D::uniform(2.0, 1.0, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_beta_matches_uniform() {
        let u = Axis1D::uniform(0.0, 1.0, 17).unwrap();
        for seed in [0, 1, 42, u64::MAX] {
            assert_eq!(Axis1D::random_perturbed(0.0, 1.0, 17, 0.0, seed).unwrap(), u);
        }
    }

    #[test]
    fn perturbation_stays_within_bound() {
        let u = Axis1D::uniform(0.0, 1.0, 20).unwrap();
        let r = Axis1D::random_perturbed(0.0, 1.0, 20, 0.2, 42).unwrap();
        for (a, b) in u.primal().iter().zip(r.primal()) {
            assert!((a - b).abs() <= 0.2 * 0.05 + 1e-17);
        }
        assert_ne!(u, r);
        assert_axis_invariants(&r, 0.0, 1.0);
    }

    #[test]
    fn half_beta_keeps_axes_valid() {
        for seed in 0..100 {
            let a = Axis1D::random_perturbed(0.0, 1.0, 40, 0.5, seed).unwrap();
            assert_axis_invariants(&a, 0.0, 1.0);
        }
    }

    #[test]
    fn random_axis_is_reproducible() {
        let a = Axis1D::random_perturbed(0.0, 1.0, 33, 0.3, 7).unwrap();
        let b = Axis1D::random_perturbed(0.0, 1.0, 33, 0.3, 7).unwrap();
        assert_eq!(a, b);
        let c = Axis1D::random_perturbed(0.0, 1.0, 33, 0.3, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn beta_out_of_range_rejected() {
        assert!(Axis1D::random_perturbed(0.0, 1.0, 10, 0.5 + 1e-12, 1).is_err());
        assert!(Axis1D::random_perturbed(0.0, 1.0, 10, -0.1, 1).is_err());
    }

    #[test]
    fn middle_refined_small() {
        let a = Axis1D::middle_refined(4).unwrap();
        assert_eq!(a.n_cells(), 6);
        assert_eq!(a.primal()[3], 0.5);
        let w = a.cell_widths();
        let min = a.min_width();
        assert_eq!(w[2], min);
        assert_eq!(w[3], min);
        assert_axis_invariants(&a, 0.0, 1.0);
    }

    #[test]
    fn middle_refined_symmetry() {
        for n in [8, 40] {
            let a = Axis1D::middle_refined(n).unwrap();
            let p = a.primal();
            let last = p.len() - 1;
            for k in 0..=last {
                assert!((p[k] + p[last - k] - 1.0).abs() <= 1e-15);
            }
            assert_axis_invariants(&a, 0.0, 1.0);
        }
        assert!(Axis1D::middle_refined(7).is_err());
        assert!(Axis1D::middle_refined(2).is_err());
    }

    #[test]
    fn corner_refined_formula() {
        let a = Axis1D::corner_refined(2).unwrap();
        assert_eq!(a.primal(), &[-0.5, 0.5 - 0.5f64.powf(1.5), 0.5]);
        for n in [2, 3, 40, 200] {
            let a = Axis1D::corner_refined(n).unwrap();
            assert_axis_invariants(&a, -0.5, 0.5);
            let w = a.cell_widths();
            assert_eq!(w[n - 1], a.min_width());
        }
        assert!(Axis1D::corner_refined(1).is_err());
    }

    #[test]
    fn remap_preserves_endpoints() {
        let a = Axis1D::corner_refined(30).unwrap().remapped(0.0, 2.0).unwrap();
        assert_axis_invariants(&a, 0.0, 2.0);
    }

    #[test]
    fn regularity_ratio() {
        let g = StaggeredGrid2D::build(GridFamily::Uniform, 16, [0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((g.regularity_ratio() - 1.0).abs() <= 1e-15);
        let s40 = StaggeredGrid2D::build(GridFamily::Corner, 40, [-0.5, 0.5, -0.5, 0.5])
            .unwrap()
            .regularity_ratio();
        let s80 = StaggeredGrid2D::build(GridFamily::Corner, 80, [-0.5, 0.5, -0.5, 0.5])
            .unwrap()
            .regularity_ratio();
        assert!(s80 > s40 && s40 > 1.0);
    }

    #[test]
    fn random_grid_axes_use_distinct_streams() {
        let g = StaggeredGrid2D::build(
            GridFamily::Random { beta: 0.3, seed: 5 },
            12,
            [0.0, 1.0, 0.0, 1.0],
        )
        .unwrap();
        assert_ne!(g.x_axis(), g.y_axis());
    }

    #[test]
    fn csv_has_header_and_points() {
        let a = Axis1D::uniform(0.0, 1.0, 4).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "primal");
        let parsed: Vec<f64> = lines[1..].iter().map(|l| l.parse().unwrap()).collect();
        assert_eq!(parsed, a.primal());
    }
}
