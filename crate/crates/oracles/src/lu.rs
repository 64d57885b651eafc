//! Complex LU with partial pivoting and the input-output relation built on it.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub struct Lu {
    lu: DMatrix<Complex64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(mut a: DMatrix<Complex64>) -> Option<Self> {
        let n = a.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))?;
            if a[(p, k)].norm() == 0.0 {
                return None;
            }
            if p != k {
                a.swap_rows(p, k);
                perm.swap(p, k);
            }
            for i in k + 1..n {
                let l = a[(i, k)] / a[(k, k)];
                a[(i, k)] = l;
                for j in k + 1..n {
                    let v = l * a[(k, j)];
                    a[(i, j)] -= v;
                }
            }
        }
        Some(Lu { lu: a, perm })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.nrows();
        let mut y: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let v = self.lu[(i, j)] * y[j];
                y[i] -= v;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = self.lu[(i, j)] * y[j];
                y[i] -= v;
            }
            y[i] /= self.lu[(i, i)];
        }
        y
    }
}

/// `S = -K (M + i w)^-1 K - I` column by column.
pub fn scattering(m: &DMatrix<Complex64>, k: &[f64], omega: f64) -> Option<DMatrix<Complex64>> {
    let n = m.nrows();
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] += Complex64::new(0.0, omega);
    }
    let lu = Lu::new(a)?;
    let mut s = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[col] = Complex64::new(k[col], 0.0);
        let x = lu.solve(&e);
        for row in 0..n {
            s[(row, col)] = -k[row] * x[row];
        }
        s[(col, col)] -= 1.0;
    }
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_permuted_system() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let a = DMatrix::from_row_slice(3, 3, &[c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, -1.0), c(3.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let x = [c(1.0, 2.0), c(-1.0, 0.5), c(0.0, 3.0)];
        let b: Vec<Complex64> = (0..3).map(|i| (0..3).map(|j| a[(i, j)] * x[j]).sum()).collect();
        let got = Lu::new(a).unwrap().solve(&b);
        for i in 0..3 {
            assert!((got[i] - x[i]).norm() < 1e-14);
        }
    }
}
