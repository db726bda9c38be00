//! Grid functions on the staggered grid.
//!
//! * [`CellField`] lives at cell centers `(x_i, y_j)`.
//! * [`EdgeFieldX`] lives at vertical faces `(x_{e}, y_j)`, `e = 0..=nx`, where
//!   `x_e` is primal point `e`. Faces `0` and `nx` are on the boundary.
//! * [`EdgeFieldY`] lives at horizontal faces `(x_i, y_e)`, `e = 0..=ny`.
//!
//! All storage is row-major with the x index running fastest.

mod norms;
mod ops;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::StaggeredGrid2D;

pub use norms::{inner_m, inner_tm, inner_x, inner_y, norm_m, norm_tm, norm_x, norm_y};
pub use ops::{delta_correction, div_x, div_y, dx, dy, gradient, interp_x, interp_y};

pub type GridRef = Arc<StaggeredGrid2D>;

fn same_grid(a: &GridRef, b: &GridRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn ensure_same_grid(a: &GridRef, b: &GridRef, what: &'static str) -> Result<()> {
    if same_grid(a, b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(what))
    }
}

macro_rules! grid_function {
    ($name:ident, $len:expr) => {
        #[derive(Debug, Clone)]
        pub struct $name {
            grid: GridRef,
            values: Vec<f64>,
        }

        impl $name {
            pub fn zeros(grid: GridRef) -> Self {
                let n = ($len)(&*grid);
                Self {
                    grid,
                    values: vec![0.0; n],
                }
            }

            pub fn from_values(grid: GridRef, values: Vec<f64>) -> Result<Self> {
                let expected = ($len)(&*grid);
                if values.len() != expected {
                    return Err(Error::Dimension {
                        expected,
                        found: values.len(),
                    });
                }
                Ok(Self { grid, values })
            }

            pub fn grid(&self) -> &GridRef {
                &self.grid
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            pub fn is_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }
        }

        impl PartialEq for $name {
            fn eq(&self, other: &Self) -> bool {
                same_grid(&self.grid, &other.grid) && self.values == other.values
            }
        }
    };
}

grid_function!(CellField, |g: &StaggeredGrid2D| g.nx() * g.ny());
grid_function!(EdgeFieldX, |g: &StaggeredGrid2D| (g.nx() + 1) * g.ny());
grid_function!(EdgeFieldY, |g: &StaggeredGrid2D| g.nx() * (g.ny() + 1));

impl CellField {
    /// Samples `f(x_i, y_j)` at every cell center.
    pub fn sample(grid: GridRef, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid
            .y_axis()
            .centers()
            .iter()
            .flat_map(|&y| grid.x_axis().centers().iter().map(move |&x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { grid, values }
    }

    pub fn constant(grid: GridRef, value: f64) -> Self {
        let n = grid.n_cells();
        Self {
            grid,
            values: vec![value; n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx() + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let nx = self.grid.nx();
        self.values[j * nx + i] = v;
    }

    /// `(U, 1)_M`.
    pub fn mass(&self) -> f64 {
        norms::weighted_sum(&self.grid, &self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Location `(i, j)` of the largest value. Ties go to the first cell in
    /// row-major order, i.e. lowest `j`, then lowest `i`.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        let nx = self.grid.nx();
        (best % nx, best / nx)
    }

    /// `self + factor * other`, element-wise.
    pub fn add_scaled(&self, factor: f64, other: &CellField) -> Result<CellField> {
        ensure_same_grid(&self.grid, &other.grid, "add_scaled")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(CellField {
            grid: self.grid.clone(),
            values,
        })
    }
}

impl EdgeFieldX {
    /// Samples `f(x_e, y_j)` at the interior vertical faces; boundary faces
    /// are left at zero.
    pub fn sample_interior(grid: GridRef, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        let nx = out.grid.nx();
        for j in 0..out.grid.ny() {
            let y = out.grid.y_axis().centers()[j];
            for e in 1..nx {
                let x = out.grid.x_axis().primal()[e];
                out.values[j * (nx + 1) + e] = f(x, y);
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, e: usize, j: usize) -> f64 {
        self.values[j * (self.grid.nx() + 1) + e]
    }

    #[inline]
    pub fn set(&mut self, e: usize, j: usize, v: f64) {
        let stride = self.grid.nx() + 1;
        self.values[j * stride + e] = v;
    }
}

impl EdgeFieldY {
    /// Samples `f(x_i, y_e)` at the interior horizontal faces; boundary faces
    /// are left at zero.
    pub fn sample_interior(grid: GridRef, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        let (nx, ny) = (out.grid.nx(), out.grid.ny());
        for e in 1..ny {
            let y = out.grid.y_axis().primal()[e];
            for i in 0..nx {
                let x = out.grid.x_axis().centers()[i];
                out.values[e * nx + i] = f(x, y);
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, i: usize, e: usize) -> f64 {
        self.values[e * self.grid.nx() + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, e: usize, v: f64) {
        let nx = self.grid.nx();
        self.values[e * nx + i] = v;
    }
}

/// A discrete gradient `(d_x g, d_y g)` or any pair of face fields.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub gx: EdgeFieldX,
    pub gy: EdgeFieldY,
}

impl GradientPair {
    pub fn new(gx: EdgeFieldX, gy: EdgeFieldY) -> Result<Self> {
        ensure_same_grid(gx.grid(), gy.grid(), "gradient pair")?;
        Ok(Self { gx, gy })
    }

    pub fn zeros(grid: GridRef) -> Self {
        Self {
            gx: EdgeFieldX::zeros(grid.clone()),
            gy: EdgeFieldY::zeros(grid),
        }
    }

    /// `max |gx| + max |gy|`.
    pub fn inf_norm(&self) -> f64 {
        self.gx.max_abs() + self.gy.max_abs()
    }

    pub fn difference(&self, other: &GradientPair) -> Result<GradientPair> {
        ensure_same_grid(self.gx.grid(), other.gx.grid(), "gradient difference")?;
        let sub = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p - q).collect() };
        Ok(GradientPair {
            gx: EdgeFieldX {
                grid: self.gx.grid.clone(),
                values: sub(&self.gx.values, &other.gx.values),
            },
            gy: EdgeFieldY {
                grid: self.gy.grid.clone(),
                values: sub(&self.gy.values, &other.gy.values),
            },
        })
    }
}
