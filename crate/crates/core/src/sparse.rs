//! Compressed-row complex matrices.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// entries that sum to exactly zero are kept.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, Vec::new())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.row(r)
            .find(|&(cc, _)| cc == c)
            .map_or(Complex64::new(0.0, 0.0), |(_, v)| v)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension {
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.cols,
            self.rows,
            self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect(),
        )
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &CsrMatrix, alpha: Complex64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut t: Vec<_> = self.triplets().collect();
        t.extend(other.triplets().map(|(r, c, v)| (r, c, v * alpha)));
        Self::from_triplets(self.rows, self.cols, t)
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut d = vec![vec![Complex64::new(0.0, 0.0); self.cols]; self.rows];
        for (r, c, v) in self.triplets() {
            d[r][c] += v;
        }
        d
    }

    /// Text dump, one `row col re im` line per stored entry.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (r, c, v) in self.triplets() {
            let _ = writeln!(s, "{r} {c} {:e} {:e}", v.re, v.im);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, c(1.0, 0.0)), (0, 0, c(2.0, 1.0)), (1, 2, c(0.5, 0.5))]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), c(1.5, 0.5));
        assert_eq!(m.get(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn matvec_and_adjoint() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(0.0, 1.0)), (1, 0, c(2.0, 0.0)), (1, 1, c(1.0, -1.0))]);
        let y = m.matvec(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(y, vec![c(-1.0, 0.0), c(3.0, 1.0)]);
        let a = m.adjoint();
        assert_eq!(a.get(1, 0), c(0.0, -1.0));
        assert_eq!(a.get(1, 1), c(1.0, 1.0));
        assert!(m.matvec(&[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn dump_format() {
        let m = CsrMatrix::from_triplets(1, 1, vec![(0, 0, c(1.0, -0.5))]);
        assert_eq!(m.dump(), "0 0 1e0 -5e-1\n");
    }
}
