use crate::error::{Error, Result};

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// Intended as a reference solution for small systems. A pivot whose
/// magnitude falls below `1e-14` times the largest entry of `A` is treated as
/// singular.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: a.len(),
        });
    }
    if let Some(row) = a.iter().find(|row| row.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            found: row.len(),
        });
    }
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = 1e-14 * if scale > 0.0 { scale } else { 1.0 };

    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))
            .expect("non-empty range");
        let pivot = m[pivot_row][col];
        if pivot.abs() < threshold {
            return Err(Error::Singular { column: col, pivot });
        }
        m.swap(col, pivot_row);
        x.swap(col, pivot_row);
        for r in col + 1..n {
            let factor = m[r][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
            x[r] -= factor * x[col];
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for c in r + 1..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Ok(x)
}
