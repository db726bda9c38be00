//! Difference quotients, face interpolation and the second-order gradient
//! correction.

use super::{ensure_same_grid, CellField, EdgeFieldX, EdgeFieldY, GradientPair};
use crate::error::Result;

/// Center-to-face difference in x. Boundary faces carry zero, which is how
/// the homogeneous Neumann condition enters every flux.
pub fn dx(p: &CellField) -> EdgeFieldX {
    let grid = p.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let dual = grid.x_axis().dual_widths();
    let mut out = EdgeFieldX::zeros(grid.clone());
    let v = p.values();
    let o = out.values_mut();
    for j in 0..ny {
        let row = j * nx;
        let orow = j * (nx + 1);
        for e in 1..nx {
            o[orow + e] = (v[row + e] - v[row + e - 1]) / dual[e - 1];
        }
    }
    out
}

/// Center-to-face difference in y; boundary faces carry zero.
pub fn dy(p: &CellField) -> EdgeFieldY {
    let grid = p.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let dual = grid.y_axis().dual_widths();
    let mut out = EdgeFieldY::zeros(grid.clone());
    let v = p.values();
    let o = out.values_mut();
    for e in 1..ny {
        for i in 0..nx {
            o[e * nx + i] = (v[e * nx + i] - v[(e - 1) * nx + i]) / dual[e - 1];
        }
    }
    out
}

pub fn gradient(p: &CellField) -> GradientPair {
    GradientPair {
        gx: dx(p),
        gy: dy(p),
    }
}

/// Face-to-center difference in x over the cell width.
pub fn div_x(v: &EdgeFieldX) -> CellField {
    let grid = v.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let w = grid.x_axis().cell_widths();
    let mut out = CellField::zeros(grid.clone());
    let src = v.values();
    let o = out.values_mut();
    for j in 0..ny {
        let srow = j * (nx + 1);
        for i in 0..nx {
            o[j * nx + i] = (src[srow + i + 1] - src[srow + i]) / w[i];
        }
    }
    out
}

/// Face-to-center difference in y over the cell height.
pub fn div_y(v: &EdgeFieldY) -> CellField {
    let grid = v.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let w = grid.y_axis().cell_widths();
    let mut out = CellField::zeros(grid.clone());
    let src = v.values();
    let o = out.values_mut();
    for j in 0..ny {
        for i in 0..nx {
            o[j * nx + i] = (src[(j + 1) * nx + i] - src[j * nx + i]) / w[j];
        }
    }
    out
}

/// Bilinear interpolant of cell values evaluated at interior vertical faces.
///
/// The face `(x_{e}, y_j)` lies on the line `y = y_j` through two cell
/// centers, so the two `y`-weights of the bilinear formula are 1 and 0 and
/// the interpolant reduces to the 1D convex combination
/// `(w_{e} p_{e-1} + w_{e-1} p_{e}) / (2 d_{e-1})`, with `w` the cell widths
/// and `d` the dual width between the two centers. Boundary faces carry zero;
/// they only ever multiply a zero boundary gradient.
pub fn interp_x(p: &CellField) -> EdgeFieldX {
    let grid = p.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let w = grid.x_axis().cell_widths();
    let dual = grid.x_axis().dual_widths();
    let mut out = EdgeFieldX::zeros(grid.clone());
    let v = p.values();
    let o = out.values_mut();
    for j in 0..ny {
        let row = j * nx;
        for e in 1..nx {
            let denom = 2.0 * dual[e - 1];
            o[j * (nx + 1) + e] = (w[e] * v[row + e - 1] + w[e - 1] * v[row + e]) / denom;
        }
    }
    out
}

/// Bilinear interpolant at interior horizontal faces; see [`interp_x`].
pub fn interp_y(p: &CellField) -> EdgeFieldY {
    let grid = p.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let w = grid.y_axis().cell_widths();
    let dual = grid.y_axis().dual_widths();
    let mut out = EdgeFieldY::zeros(grid.clone());
    let v = p.values();
    let o = out.values_mut();
    for e in 1..ny {
        let denom = 2.0 * dual[e - 1];
        for i in 0..nx {
            o[e * nx + i] = (w[e] * v[(e - 1) * nx + i] + w[e - 1] * v[e * nx + i]) / denom;
        }
    }
    out
}

/// `(dx_i^2 / 8) p_xx + (dy_j^2 / 8) p_yy` at every cell, given the exact
/// second derivatives sampled at the centers.
///
/// Subtracting this from the sampled function makes the face differences
/// second-order accurate gradients on non-uniform grids.
pub fn delta_correction(pxx: &CellField, pyy: &CellField) -> Result<CellField> {
    ensure_same_grid(pxx.grid(), pyy.grid(), "delta correction")?;
    let grid = pxx.grid().clone();
    let (wx, wy) = (grid.x_axis().cell_widths(), grid.y_axis().cell_widths());
    let mut out = CellField::zeros(grid.clone());
    let nx = grid.nx();
    for (k, o) in out.values_mut().iter_mut().enumerate() {
        let (i, j) = (k % nx, k / nx);
        *o = wx[i] * wx[i] / 8.0 * pxx.values()[k] + wy[j] * wy[j] / 8.0 * pyy.values()[k];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fields::{norm_x, GridRef};
    use crate::grid::{GridFamily, StaggeredGrid2D};

    fn grid(family: GridFamily, m: usize) -> GridRef {
        Arc::new(StaggeredGrid2D::build(family, m, [0.0, 1.0, 0.0, 1.0]).unwrap())
    }

    fn random_grid(m: usize, seed: u64) -> GridRef {
        grid(GridFamily::Random { beta: 0.3, seed }, m)
    }

    #[test]
    fn differences_annihilate_constants() {
        let g = random_grid(9, 3);
        let p = CellField::constant(g, 7.0);
        assert!(dx(&p).values().iter().all(|&v| v == 0.0));
        assert!(dy(&p).values().iter().all(|&v| v == 0.0));
        assert!(div_x(&dx(&p)).values().iter().all(|&v| v == 0.0));
        assert!(div_y(&dy(&p)).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dx_exact_on_linear() {
        let g = random_grid(11, 9);
        let p = CellField::sample(g.clone(), |x, _| x);
        let d = dx(&p);
        for j in 0..g.ny() {
            assert_eq!(d.get(0, j), 0.0);
            assert_eq!(d.get(g.nx(), j), 0.0);
            for e in 1..g.nx() {
                assert!((d.get(e, j) - 1.0).abs() < 1e-12);
            }
        }
        let q = CellField::sample(g.clone(), |_, y| y);
        let d = dy(&q);
        for e in 1..g.ny() {
            for i in 0..g.nx() {
                assert!((d.get(i, e) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dx_hand_value_for_square() {
        let g = grid(GridFamily::Uniform, 4);
        let p = CellField::sample(g, |x, _| x * x);
        // (0.375^2 - 0.125^2) / 0.25
        assert!((dx(&p).get(1, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn div_of_linear_gradient() {
        let g = random_grid(8, 1);
        let p = CellField::sample(g.clone(), |x, _| x);
        let lap = div_x(&dx(&p));
        for j in 0..g.ny() {
            for i in 1..g.nx() - 1 {
                assert!(lap.get(i, j).abs() < 1e-10);
            }
            // first and last columns see one zero boundary face
            assert!((lap.get(0, j) - 1.0 / g.x_axis().cell_widths()[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn div_of_constant_faces_is_zero() {
        let g = random_grid(6, 2);
        let mut v = EdgeFieldX::zeros(g.clone());
        v.values_mut().fill(3.0);
        assert!(div_x(&v).values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn interpolation_reproduces_constants_and_bilinears() {
        let g = random_grid(10, 4);
        let c = CellField::constant(g.clone(), 3.0);
        let ix = interp_x(&c);
        for j in 0..g.ny() {
            for e in 1..g.nx() {
                assert!((ix.get(e, j) - 3.0).abs() < 1e-15);
            }
        }
        let f = |x: f64, y: f64| 0.3 + 1.7 * x - 0.4 * y + 2.2 * x * y;
        let p = CellField::sample(g.clone(), f);
        let ix = interp_x(&p);
        let iy = interp_y(&p);
        for j in 0..g.ny() {
            for e in 1..g.nx() {
                let exact = f(g.x_axis().primal()[e], g.y_axis().centers()[j]);
                assert!((ix.get(e, j) - exact).abs() <= 1e-14 * exact.abs().max(1.0));
            }
        }
        for e in 1..g.ny() {
            for i in 0..g.nx() {
                let exact = f(g.x_axis().centers()[i], g.y_axis().primal()[e]);
                assert!((iy.get(i, e) - exact).abs() <= 1e-14 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn uniform_interpolation_is_average() {
        let g = grid(GridFamily::Uniform, 5);
        let p = CellField::sample(g.clone(), |x, y| (3.0 * x).sin() + y * y);
        let ix = interp_x(&p);
        for j in 0..5 {
            for e in 1..5 {
                let avg = (p.get(e - 1, j) + p.get(e, j)) / 2.0;
                assert!((ix.get(e, j) - avg).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn delta_of_linear_is_zero_and_of_square_is_quarter_percent() {
        let g = grid(GridFamily::Uniform, 10);
        let zero = CellField::zeros(g.clone());
        assert!(delta_correction(&zero, &zero)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        // p = x^2: p_xx = 2, h = 0.1
        let two = CellField::constant(g.clone(), 2.0);
        let d = delta_correction(&two, &zero).unwrap();
        for v in d.values() {
            assert!((v - 0.0025).abs() < 1e-16);
        }
    }

    #[test]
    fn delta_norm_is_second_order() {
        // p = sin(pi x) cos(pi y)
        let pi = std::f64::consts::PI;
        let mut norms = Vec::new();
        for m in [16, 32, 64, 128] {
            let g = random_grid(m, 11);
            let pxx = CellField::sample(g.clone(), |x, y| -pi * pi * (pi * x).sin() * (pi * y).cos());
            let d = delta_correction(&pxx, &pxx).unwrap();
            norms.push(crate::fields::norm_m(&d));
        }
        // random widths make single ratios noisy; check the overall slope
        let order = (norms[0] / norms[3]).log2() / 3.0;
        assert!(order >= 1.95, "{norms:?}");
    }

    #[test]
    fn corrected_gradient_is_second_order_on_random_grids() {
        let pi = std::f64::consts::PI;
        let p = |x: f64, y: f64| (pi * x).sin() * (pi * y).cos();
        let pxx = |x: f64, y: f64| -pi * pi * p(x, y);
        let mut errs = Vec::new();
        for m in [16, 32, 64, 128] {
            let g = random_grid(m, 2024);
            let corrected = CellField::sample(g.clone(), p)
                .add_scaled(
                    -1.0,
                    &delta_correction(
                        &CellField::sample(g.clone(), pxx),
                        &CellField::sample(g.clone(), pxx),
                    )
                    .unwrap(),
                )
                .unwrap();
            let exact = EdgeFieldX::sample_interior(g.clone(), |x, y| pi * (pi * x).cos() * (pi * y).cos());
            let d = dx(&corrected);
            let diff: Vec<f64> = exact.values().iter().zip(d.values()).map(|(a, b)| a - b).collect();
            errs.push(norm_x(&EdgeFieldX::from_values(g, diff).unwrap()));
        }
        let order = (errs[0] / errs[3]).log2() / 3.0;
        assert!(order >= 1.8, "{errs:?} order {order}");
    }
}
