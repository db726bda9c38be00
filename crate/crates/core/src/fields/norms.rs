//! Discrete inner products and norms.
//!
//! Every sum runs sequentially in storage order (row-major, x fastest), so
//! results are bit-identical for identical inputs. Face sums cover interior
//! faces only.

use super::{ensure_same_grid, CellField, EdgeFieldX, EdgeFieldY, GradientPair};
use crate::error::Result;
use crate::grid::StaggeredGrid2D;

pub(super) fn weighted_sum(grid: &StaggeredGrid2D, values: &[f64]) -> f64 {
    let (wx, wy) = (grid.x_axis().cell_widths(), grid.y_axis().cell_widths());
    let nx = grid.nx();
    let mut sum = 0.0;
    for (j, hy) in wy.iter().enumerate() {
        for (i, hx) in wx.iter().enumerate() {
            sum += hx * hy * values[j * nx + i];
        }
    }
    sum
}

/// `(f, g)_M = sum dx_i dy_j f_ij g_ij`.
pub fn inner_m(f: &CellField, g: &CellField) -> Result<f64> {
    ensure_same_grid(f.grid(), g.grid(), "inner_m")?;
    let grid = f.grid();
    let (wx, wy) = (grid.x_axis().cell_widths(), grid.y_axis().cell_widths());
    let nx = grid.nx();
    let (a, b) = (f.values(), g.values());
    let mut sum = 0.0;
    for (j, hy) in wy.iter().enumerate() {
        for (i, hx) in wx.iter().enumerate() {
            let k = j * nx + i;
            sum += hx * hy * (a[k] * b[k]);
        }
    }
    Ok(sum)
}

pub fn norm_m(f: &CellField) -> f64 {
    inner_m(f, f).expect("same field").sqrt()
}

/// `(f, g)_x` over interior vertical faces, weighted by dual x-width times
/// cell height.
pub fn inner_x(f: &EdgeFieldX, g: &EdgeFieldX) -> Result<f64> {
    ensure_same_grid(f.grid(), g.grid(), "inner_x")?;
    let grid = f.grid();
    let (dual, wy) = (grid.x_axis().dual_widths(), grid.y_axis().cell_widths());
    let stride = grid.nx() + 1;
    let (a, b) = (f.values(), g.values());
    let mut sum = 0.0;
    for (j, hy) in wy.iter().enumerate() {
        for (e, hx) in dual.iter().enumerate() {
            let k = j * stride + e + 1;
            sum += hx * hy * (a[k] * b[k]);
        }
    }
    Ok(sum)
}

pub fn norm_x(f: &EdgeFieldX) -> f64 {
    inner_x(f, f).expect("same field").sqrt()
}

/// `(f, g)_y` over interior horizontal faces.
pub fn inner_y(f: &EdgeFieldY, g: &EdgeFieldY) -> Result<f64> {
    ensure_same_grid(f.grid(), g.grid(), "inner_y")?;
    let grid = f.grid();
    let (wx, dual) = (grid.x_axis().cell_widths(), grid.y_axis().dual_widths());
    let nx = grid.nx();
    let (a, b) = (f.values(), g.values());
    let mut sum = 0.0;
    for (e, hy) in dual.iter().enumerate() {
        for (i, hx) in wx.iter().enumerate() {
            let k = (e + 1) * nx + i;
            sum += hx * hy * (a[k] * b[k]);
        }
    }
    Ok(sum)
}

pub fn norm_y(f: &EdgeFieldY) -> f64 {
    inner_y(f, f).expect("same field").sqrt()
}

pub fn inner_tm(f: &GradientPair, g: &GradientPair) -> Result<f64> {
    Ok(inner_x(&f.gx, &g.gx)? + inner_y(&f.gy, &g.gy)?)
}

pub fn norm_tm(f: &GradientPair) -> f64 {
    let (x, y) = (norm_x(&f.gx), norm_y(&f.gy));
    (x * x + y * y).sqrt()
}
