//! Exact rational arithmetic helpers.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

/// The exact value of a finite `f64`.
pub fn q(x: f64) -> Q {
    Q::from_float(x).expect("finite input")
}

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn f(x: &Q) -> f64 {
    x.to_f64().expect("representable")
}

/// `sqrt(x)` to roughly `bits` bits of relative precision, via an integer
/// square root of the scaled numerator and denominator.
pub fn sqrt(x: &Q, bits: u32) -> Q {
    assert!(!x.is_negative(), "sqrt of a negative rational");
    if x.is_zero() {
        return Q::zero();
    }
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    // sqrt(n/d) = sqrt(n d 4^k) / (d 2^k)
    let shift = 2 * bits as usize + (d.bits() as usize);
    let scaled = (n * d) << (2 * shift);
    let root = scaled.sqrt();
    Q::new(
        BigInt::from_biguint(Sign::Plus, root),
        BigInt::from_biguint(Sign::Plus, d.clone()) << shift,
    )
}

/// Gauss-Jordan inverse of a square rational matrix.
pub fn invert(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero()).expect("singular matrix");
        a.swap(col, p);
        let piv = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &piv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..2 * n {
                    let v = &factor * &a[col][c];
                    a[r][c] -= v;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_two() {
        let r = sqrt(&int(2), 100);
        assert!((f(&r) - std::f64::consts::SQRT_2).abs() < 1e-16);
        let err = &r * &r - int(2);
        assert!(f(&err).abs() < 1e-29);
    }

    #[test]
    fn inverse_round_trip() {
        let m = vec![
            vec![int(2), int(-1), int(0)],
            vec![int(-1), int(3), int(1)],
            vec![int(0), int(1), int(4)],
        ];
        let inv = invert(&m);
        for i in 0..3 {
            for j in 0..3 {
                let s: Q = (0..3).map(|k| &m[i][k] * &inv[k][j]).sum();
                assert_eq!(s, if i == j { Q::one() } else { Q::zero() });
            }
        }
    }
}
