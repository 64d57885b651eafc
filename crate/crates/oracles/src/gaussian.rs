//! Two-mode Gaussian correlation measures from exact symplectic invariants.

use nalgebra::Matrix4;
use num_traits::{Signed, Zero};

use crate::exact::{f, int, q, sqrt, Q};

const BITS: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub det_a: f64,
    pub det_b: f64,
    pub det_c: f64,
    pub det_sigma: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub nu_tilde_minus: f64,
    pub mutual_info: f64,
    /// Measurement on the second mode.
    pub discord_j: f64,
    pub classical_j: f64,
    /// Measurement on the first mode.
    pub discord_i: f64,
    pub classical_i: f64,
    pub log_negativity: f64,
}

fn det2(a: &Q, b: &Q, c: &Q, d: &Q) -> Q {
    a * d - b * c
}

fn det4(m: &[Vec<Q>]) -> Q {
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut det = int(1);
    for col in 0..4 {
        let Some(p) = (col..4).find(|&r| !a[r][col].is_zero()) else {
            return int(0);
        };
        if p != col {
            a.swap(col, p);
            det = -det;
        }
        let piv = a[col][col].clone();
        det *= &piv;
        for r in col + 1..4 {
            let factor = &a[r][col] / &piv;
            for c in col..4 {
                let v = &factor * &a[col][c];
                a[r][c] -= v;
            }
        }
    }
    det
}

/// Entropy function in bits, given `x - 1` exactly.
fn entropy(x_minus_1: &Q) -> f64 {
    let h = f(&(x_minus_1 / int(2)));
    assert!(h > -1e-9, "symplectic eigenvalue below one: 1 + {}", 2.0 * h);
    if h <= 0.0 {
        return 0.0;
    }
    ((1.0 + h) * h.ln_1p() - h * h.ln()) / std::f64::consts::LN_2
}

fn entropy_of_sqrt(y: &Q) -> f64 {
    entropy(&(sqrt(y, BITS) - int(1)))
}

/// Minimised conditional determinant for a Gaussian measurement on the mode
/// with local determinant `b`.
fn e_min(a: &Q, b: &Q, c: &Q, d: &Q) -> Q {
    let one = int(1);
    let ab = a * b;
    if c.is_zero() && *d == ab {
        return a.clone();
    }
    let dab = d - &ab;
    let c2 = c * c;
    if dab.clone() * &dab <= (&one + b) * &c2 * (a + d) {
        let bm1 = b - &one;
        if bm1.is_zero() {
            return a.clone();
        }
        let inner = &c2 + &bm1 * (d - a);
        let root = sqrt(&inner.abs(), BITS);
        (int(2) * &c2 + &bm1 * (d - a) + int(2) * c.abs() * root) / (&bm1 * &bm1)
    } else {
        let rad = &c2 * &c2 + &dab * &dab - int(2) * &c2 * (&ab + d);
        (&ab - &c2 + d - sqrt(&rad.abs(), BITS)) / (int(2) * b)
    }
}

pub fn reference(sigma: &Matrix4<f64>) -> Reference {
    let s: Vec<Vec<Q>> = (0..4).map(|i| (0..4).map(|j| q(sigma[(i, j)])).collect()).collect();
    let a = det2(&s[0][0], &s[0][1], &s[1][0], &s[1][1]);
    let b = det2(&s[2][2], &s[2][3], &s[3][2], &s[3][3]);
    let c = det2(&s[0][2], &s[0][3], &s[1][2], &s[1][3]);
    let d = det4(&s);

    let spectrum = |delta: &Q| {
        let disc = delta * delta - int(4) * &d;
        let root = sqrt(&disc.abs(), BITS);
        ((delta + &root) / int(2), (delta - &root) / int(2))
    };
    let (plus2, minus2) = spectrum(&(&a + &b + int(2) * &c));
    let (_, tilde2) = spectrum(&(&a + &b - int(2) * &c));
    // small root from the product, which keeps it accurate for near-pure states
    let minus2 = if plus2.is_zero() { minus2 } else { &d / &plus2 };

    let (fa, fb) = (entropy_of_sqrt(&a), entropy_of_sqrt(&b));
    let (fm, fp) = (entropy_of_sqrt(&minus2), entropy_of_sqrt(&plus2));
    let e_j = e_min(&a, &b, &c, &d);
    let e_i = e_min(&b, &a, &c, &d);
    let (fe_j, fe_i) = (entropy_of_sqrt(&e_j), entropy_of_sqrt(&e_i));

    let nu_tilde = f(&sqrt(&tilde2.abs(), BITS));
    Reference {
        det_a: f(&a),
        det_b: f(&b),
        det_c: f(&c),
        det_sigma: f(&d),
        nu_minus: f(&sqrt(&minus2, BITS)),
        nu_plus: f(&sqrt(&plus2, BITS)),
        nu_tilde_minus: nu_tilde,
        mutual_info: fa + fb - fm - fp,
        discord_j: fb - fm - fp + fe_j,
        classical_j: fa - fe_j,
        discord_i: fa - fm - fp + fe_i,
        classical_i: fb - fe_i,
        log_negativity: (-nu_tilde.log2()).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_empty() {
        let r = reference(&Matrix4::identity());
        assert_eq!(r.mutual_info, 0.0);
        assert_eq!(r.discord_j, 0.0);
        assert_eq!(r.nu_minus, 1.0);
    }

    #[test]
    fn thermal_entropy() {
        // a single thermal mode with n = 1 has x = 3 and entropy 2 bits
        let r = reference(&Matrix4::from_diagonal(&nalgebra::Vector4::new(3.0, 3.0, 1.0, 1.0)));
        assert!((r.nu_plus - 3.0).abs() < 1e-15);
        assert!((r.mutual_info).abs() < 1e-15);
        let e = entropy(&int(2));
        assert!((e - 2.0).abs() < 1e-15);
    }
}
