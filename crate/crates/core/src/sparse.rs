//! Compressed-sparse-column complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CscMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut sorted: Vec<_> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        let mut counts = vec![0usize; ncols];
        for (r, c, v) in sorted {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                counts[c] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..ncols {
            col_ptr[c + 1] = col_ptr[c] + counts[c];
        }
        let mut m = CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        };
        m.prune();
        m
    }

    pub fn from_dense(d: &DMatrix<Complex64>) -> Self {
        let mut trip = Vec::new();
        for c in 0..d.ncols() {
            for r in 0..d.nrows() {
                let v = d[(r, c)];
                if v != ZERO {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), &trip)
    }

    fn prune(&mut self) {
        let mut col_ptr = vec![0; self.ncols + 1];
        let mut row_idx = Vec::with_capacity(self.row_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                if self.values[k] != ZERO {
                    row_idx.push(self.row_idx[k]);
                    values.push(self.values[k]);
                }
            }
            col_ptr[c + 1] = row_idx.len();
        }
        self.col_ptr = col_ptr;
        self.row_idx = row_idx;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(k) => self.values[range.start + k],
            Err(_) => ZERO,
        }
    }

    /// Iterate stored entries as `(row, col, value)` in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.ncols).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], c, self.values[k]))
        })
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut d = DMatrix::from_element(self.nrows, self.ncols, ZERO);
        for (r, c, v) in self.iter() {
            d[(r, c)] = v;
        }
        d
    }

    pub fn adjoint(&self) -> Self {
        let trip: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, &trip)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m.prune();
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let trip: Vec<_> = self.iter().chain(other.iter()).collect();
        Self::from_triplets(self.nrows, self.ncols, &trip)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Sparse-sparse product, column by column with a dense accumulator.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![ZERO; self.nrows];
        let mut touched = vec![false; self.nrows];
        let mut pattern = Vec::new();
        let mut col_ptr = vec![0; other.ncols + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for c in 0..other.ncols {
            for k in other.col_ptr[c]..other.col_ptr[c + 1] {
                let (j, b) = (other.row_idx[k], other.values[k]);
                for kk in self.col_ptr[j]..self.col_ptr[j + 1] {
                    let r = self.row_idx[kk];
                    if !touched[r] {
                        touched[r] = true;
                        pattern.push(r);
                    }
                    acc[r] += self.values[kk] * b;
                }
            }
            pattern.sort_unstable();
            for &r in &pattern {
                if acc[r] != ZERO {
                    row_idx.push(r);
                    values.push(acc[r]);
                }
                acc[r] = ZERO;
                touched[r] = false;
            }
            pattern.clear();
            col_ptr[c + 1] = row_idx.len();
        }
        CscMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn mul_dense(&self, d: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(self.ncols, d.nrows());
        let mut out = DMatrix::from_element(self.nrows, d.ncols(), ZERO);
        for j in 0..d.ncols() {
            for c in 0..self.ncols {
                let x = d[(c, j)];
                if x == ZERO {
                    continue;
                }
                for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                    out[(self.row_idx[k], j)] += self.values[k] * x;
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.iter() {
            for (r2, c2, v2) in other.iter() {
                trip.push((r1 * other.nrows + r2, c1 * other.ncols + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, &trip)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample() -> CscMatrix {
        CscMatrix::from_triplets(
            3,
            3,
            &[(0, 0, c(1.0, 0.0)), (2, 0, c(0.0, 2.0)), (1, 2, c(-3.0, 1.0)), (1, 2, c(1.0, 0.0))],
        )
    }

    #[test]
    fn duplicates_sum_and_zeros_vanish() {
        let m = sample();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), c(-2.0, 1.0));
        let z = CscMatrix::from_triplets(2, 2, &[(0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0))]);
        assert_eq!(z.nnz(), 0);
    }

    #[test]
    fn dense_round_trip_and_products_agree() {
        let m = sample();
        let d = m.to_dense();
        assert_eq!(CscMatrix::from_dense(&d), m);
        let p = m.mul(&m.adjoint());
        let pd = &d * d.adjoint();
        assert!((p.to_dense() - &pd).camax() < 1e-14);
        assert!((m.mul_dense(&d) - &d * &d).camax() < 1e-14);
        assert_eq!(m.adjoint().adjoint(), m);
    }

    #[test]
    fn kron_matches_dense_kron() {
        let a = sample();
        let b = CscMatrix::from_triplets(2, 2, &[(0, 1, c(1.0, 0.0)), (1, 1, c(0.5, -0.5))]);
        let k = a.kron(&b).to_dense();
        let kd = a.to_dense().kronecker(&b.to_dense());
        assert_eq!(k, kd);
    }
}
