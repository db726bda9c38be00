//! Matrix assembly and matrix-free application of the discrete operators.
//!
//! Assembled systems are scaled row-wise by the cell areas
//! `|K_ij| = dx_i dy_j`. In that form the diffusion block is exactly
//! symmetric on any tensor grid, every column of the diffusion and
//! chemotaxis blocks sums to zero, and a residual `r` of a density solve
//! changes the discrete mass by exactly `tau * sum(r)`.

use crate::fields::{div_x, div_y, dx, dy, interp_x, interp_y, CellField, GradientPair};
use crate::grid::StaggeredGrid2D;
use crate::linalg::SparseMatrix;

/// `L U = D_x(d_x U) + D_y(d_y U)`, applied with the field operators.
pub fn apply_laplacian(u: &CellField) -> CellField {
    let lx = div_x(&dx(u));
    let ly = div_y(&dy(u));
    lx.add_scaled(1.0, &ly).expect("same grid")
}

/// `C(g) U = D_x(interp_x(U) g_x) + D_y(interp_y(U) g_y)`, the discrete
/// chemotactic flux divergence for a given face gradient `g`.
pub fn apply_chemotaxis(u: &CellField, grad: &GradientPair) -> CellField {
    let mut fx = interp_x(u);
    fx.values_mut()
        .iter_mut()
        .zip(grad.gx.values())
        .for_each(|(f, g)| *f *= g);
    let mut fy = interp_y(u);
    fy.values_mut()
        .iter_mut()
        .zip(grad.gy.values())
        .for_each(|(f, g)| *f *= g);
    div_x(&fx).add_scaled(1.0, &div_y(&fy)).expect("same grid")
}

/// Cell areas in storage order.
pub fn cell_areas(grid: &StaggeredGrid2D) -> Vec<f64> {
    let (wx, wy) = (grid.x_axis().cell_widths(), grid.y_axis().cell_widths());
    wy.iter()
        .flat_map(|hy| wx.iter().map(move |hx| hx * hy))
        .collect()
}

/// Assembles `shift |K| - diffusion |K| L + advection.0 |K| C(advection.1)`.
pub fn assemble(
    grid: &StaggeredGrid2D,
    shift: f64,
    diffusion: f64,
    advection: Option<(f64, &GradientPair)>,
) -> SparseMatrix {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (wx, wy) = (grid.x_axis().cell_widths(), grid.y_axis().cell_widths());
    let (dual_x, dual_y) = (grid.x_axis().dual_widths(), grid.y_axis().dual_widths());
    let n = nx * ny;
    let mut trip = Vec::with_capacity(9 * n);

    for j in 0..ny {
        for i in 0..nx {
            let row = j * nx + i;
            trip.push((row, row, shift * wx[i] * wy[j]));

            // diffusion: |K| L has off-diagonals dy_j / d_x and dx_i / d_y
            if diffusion != 0.0 {
                let mut diag = 0.0;
                if i + 1 < nx {
                    let k = diffusion * wy[j] / dual_x[i];
                    trip.push((row, row + 1, -k));
                    diag += k;
                }
                if i > 0 {
                    let k = diffusion * wy[j] / dual_x[i - 1];
                    trip.push((row, row - 1, -k));
                    diag += k;
                }
                if j + 1 < ny {
                    let k = diffusion * wx[i] / dual_y[j];
                    trip.push((row, row + nx, -k));
                    diag += k;
                }
                if j > 0 {
                    let k = diffusion * wx[i] / dual_y[j - 1];
                    trip.push((row, row - nx, -k));
                    diag += k;
                }
                trip.push((row, row, diag));
            }

            // chemotaxis: face e between cells e-1 and e carries
            // g_e * (w_e U_{e-1} + w_{e-1} U_e) / (2 d_{e-1})
            if let Some((coef, grad)) = advection {
                if coef == 0.0 {
                    continue;
                }
                if i + 1 < nx {
                    let e = i + 1;
                    let s = coef * wy[j] * grad.gx.get(e, j) / (2.0 * dual_x[e - 1]);
                    trip.push((row, row, s * wx[e]));
                    trip.push((row, row + 1, s * wx[e - 1]));
                }
                if i > 0 {
                    let e = i;
                    let s = coef * wy[j] * grad.gx.get(e, j) / (2.0 * dual_x[e - 1]);
                    trip.push((row, row - 1, -s * wx[e]));
                    trip.push((row, row, -s * wx[e - 1]));
                }
                if j + 1 < ny {
                    let e = j + 1;
                    let s = coef * wx[i] * grad.gy.get(i, e) / (2.0 * dual_y[e - 1]);
                    trip.push((row, row, s * wy[e]));
                    trip.push((row, row + nx, s * wy[e - 1]));
                }
                if j > 0 {
                    let e = j;
                    let s = coef * wx[i] * grad.gy.get(i, e) / (2.0 * dual_y[e - 1]);
                    trip.push((row, row - nx, -s * wy[e]));
                    trip.push((row, row, -s * wy[e - 1]));
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, n, trip).expect("stencil indices are in range")
}
