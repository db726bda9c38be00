use std::io::Write;

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row. Explicit zeros
/// produced by cancelling duplicates are kept as stored entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= n_rows || *c >= n_cols) {
            return Err(Error::domain(format!(
                "entry ({r}, {c}) outside a {n_rows} x {n_cols} matrix"
            )));
        }
        if let Some(&(r, c, v)) = entries.iter().find(|(_, _, v)| !v.is_finite()) {
            return Err(Error::domain(format!("entry ({r}, {c}) is not finite: {v}")));
        }
        // stable sort keeps the summation order of duplicates deterministic
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored `(col, value)` pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        match self.col_indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x`, accumulated row by row in stored column order.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension {
                expected: self.n_cols,
                found: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::Dimension {
                expected: self.n_rows,
                found: y.len(),
            });
        }
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *out = acc;
        }
        Ok(())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|r| self.get(r, r)).collect()
    }

    pub fn transpose(&self) -> Self {
        let triplets = (0..self.n_rows).flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v)));
        Self::from_triplets(self.n_cols, self.n_rows, triplets).expect("transpose of a valid matrix")
    }

    /// True when `|a_rc - a_cr| <= tol` for every pair; `tol = 0` asks for
    /// exact symmetry.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|r| self.row(r).all(|(c, v)| (v - self.get(c, r)).abs() <= tol))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in dense.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        dense
    }

    /// MatrixMarket `coordinate real general` export, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                writeln!(out, "{} {} {:e}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_from_triplets() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(a.matvec(&[3.0, -4.0]).unwrap(), vec![3.0, -4.0]);
        assert_eq!(a, SparseMatrix::identity(2));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(1, 1, [(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 3.0);
    }

    #[test]
    fn empty_matrix() {
        let a = SparseMatrix::from_triplets(3, 3, []).unwrap();
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn out_of_bounds_rejected() {
        assert!(matches!(
            SparseMatrix::from_triplets(2, 2, [(2, 0, 1.0)]),
            Err(Error::Domain(_))
        ));
        assert!(SparseMatrix::from_triplets(2, 2, [(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = SparseMatrix::identity(3);
        assert!(matches!(
            a.matvec(&[1.0, 2.0]),
            Err(Error::Dimension { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn diagonal_scaling() {
        let a = SparseMatrix::from_triplets(3, 3, [(0, 0, 2.0), (1, 1, -1.0), (2, 2, 0.5)]).unwrap();
        assert_eq!(a.matvec(&[1.0, 1.0, 4.0]).unwrap(), vec![2.0, -1.0, 2.0]);
    }

    #[test]
    fn laplacian_stencil_row() {
        // 1D second difference on 5 points
        let n = 5;
        let trip = (0..n).flat_map(|i| {
            let mut t = vec![(i, i, -2.0)];
            if i > 0 {
                t.push((i, i - 1, 1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, 1.0));
            }
            t
        });
        let a = SparseMatrix::from_triplets(n, n, trip).unwrap();
        let x = [1.0, 4.0, 9.0, 16.0, 25.0];
        let y = a.matvec(&x).unwrap();
        // row 2: 4 - 18 + 16
        assert_eq!(y[2], 2.0);
        assert_eq!(y[0], -2.0 + 4.0);
        assert!(a.is_symmetric(0.0));
    }

    #[test]
    fn csr_invariants_and_transpose() {
        let a = SparseMatrix::from_triplets(
            3,
            4,
            [(2, 3, 1.0), (0, 1, 2.0), (2, 0, 3.0), (0, 0, 4.0), (2, 3, 5.0)],
        )
        .unwrap();
        assert!(a.row_offsets().windows(2).all(|w| w[0] <= w[1]));
        for r in 0..3 {
            let cols: Vec<usize> = a.row(r).map(|(c, _)| c).collect();
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
        let t = a.transpose();
        assert_eq!(t.n_rows(), 4);
        assert_eq!(t.get(3, 2), 6.0);
        assert_eq!(t.transpose(), a);
        assert!(!a.is_symmetric(0.0));
    }

    #[test]
    fn matrix_market_header() {
        let a = SparseMatrix::identity(2);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1e0"));
    }
}
