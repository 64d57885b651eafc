//! Legendre transform of the circuit Lagrangian and the ladder-operator
//! coefficient ledger.
//!
//! The Lagrangian is
//!
//! ```text
//! L = 1/2 phidot^T M phidot - phidot^T K phi - 1/2 phi^T Linv phi - Vin(t) Cin phidot_1 (+ const)
//! ```
//!
//! with `K = [[0, gm1, 0], [0, gm2, -gm2], [0, 0, 0]]` encoding the two
//! transconductance terms `-gm1 phidot_1 phi_2 + gm2 phidot_2 (phi_3 - phi_2)`.
//! With `C = M^-1` and `d = Cin Vin e_1`, the conjugate charges are
//! `Q = M phidot - K phi - d` and
//!
//! ```text
//! H = Q^T A Q + phi^T B phi + Q^T S phi + Vin(t) (dQ . Q + dPhi . phi)
//! A = C / 2,  B = (Linv + K^T C K) / 2,  S = C K,  dQ = Cin C e_1,  dPhi = Cin K^T C e_1
//! ```
//!
//! Both quadratic forms are full double sums, so the coefficient of `Q1 Q2`
//! in `H` is `A12 + A21`. Constant (c-number) terms are dropped.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::circuit::{CapacitanceMatrix, CircuitParams, DerivedParams};
use crate::error::{QsimError, Result};
use crate::units::HBAR;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    /// Charge-charge block (1/F).
    pub a: Matrix3<f64>,
    /// Flux-flux block (1/H).
    pub b: Matrix3<f64>,
    /// Charge-flux block (1/s), `H ⊃ Q^T S phi`.
    pub s: Matrix3<f64>,
    /// Drive coupling to the charges, per volt of drive.
    pub d_q: Vector3<f64>,
    /// Drive coupling to the fluxes, per volt of drive (siemens).
    pub d_phi: Vector3<f64>,
    /// Drive amplitude (V) and frequency (Hz); `V(t) = v_in cos(2 pi f_drive t)`.
    pub v_in: f64,
    pub f_drive: f64,
    /// Transconductance matrix of the Lagrangian.
    pub k: Matrix3<f64>,
    /// Inverse capacitance matrix the transform was built from.
    pub c_inv: Matrix3<f64>,
}

impl QuadraticHamiltonian {
    pub fn drive_voltage(&self, t: f64) -> f64 {
        self.v_in * (2.0 * PI * self.f_drive * t).cos()
    }

    /// Classical `H(phi, Q)` at drive voltage `v`, constants dropped.
    pub fn energy(&self, phi: &Vector3<f64>, q: &Vector3<f64>, v: f64) -> f64 {
        q.dot(&(self.a * q))
            + phi.dot(&(self.b * phi))
            + q.dot(&(self.s * phi))
            + v * (self.d_q.dot(q) + self.d_phi.dot(phi))
    }

    /// The dropped c-number part of `sum Q phidot - L` at drive voltage `v`
    /// and input capacitance `c_in`.
    pub fn dropped_constant(&self, c_in: f64, v: f64) -> f64 {
        0.5 * c_in * c_in * v * v * self.c_inv[(0, 0)] - 0.5 * c_in * v * v
    }

    /// Node-flux velocities recovered from the canonical pair.
    pub fn velocities(&self, phi: &Vector3<f64>, q: &Vector3<f64>, c_in: f64, v: f64) -> Vector3<f64> {
        let d = Vector3::new(c_in * v, 0.0, 0.0);
        self.c_inv * (q + self.k * phi + d)
    }
}

pub fn transconductance_matrix(p: &CircuitParams) -> Matrix3<f64> {
    Matrix3::new(0.0, p.gm1, 0.0, 0.0, p.gm2, -p.gm2, 0.0, 0.0, 0.0)
}

pub fn legendre_transform(p: &CircuitParams, cm: &CapacitanceMatrix) -> Result<QuadraticHamiltonian> {
    p.validate()?;
    let c = cm.inv;
    if !c.iter().all(|x| x.is_finite()) {
        return Err(QsimError::Conditioning {
            context: "capacitance inverse".into(),
            value: f64::NAN,
        });
    }
    let k = transconductance_matrix(p);
    let l_inv = Matrix3::from_diagonal(&Vector3::new(1.0 / p.l1, 1.0 / p.l2, 1.0 / p.l3));
    let a = c * 0.5;
    let kck = k.transpose() * c * k;
    let mut b = (l_inv + kck) * 0.5;
    symmetrize(&mut b);
    let s = c * k;
    let e1 = Vector3::new(1.0, 0.0, 0.0);
    let d_q = (c * e1) * p.c_in;
    let d_phi = (k.transpose() * c * e1) * p.c_in;
    Ok(QuadraticHamiltonian {
        a,
        b,
        s,
        d_q,
        d_phi,
        v_in: p.v_in,
        f_drive: p.f_drive,
        k,
        c_inv: c,
    })
}

fn symmetrize(m: &mut Matrix3<f64>) {
    for i in 0..3 {
        for j in (i + 1)..3 {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// One factor of a ledger term: `Charge` is `(a - a†)` (proportional to the
/// node charge), `Flux` is `(a + a†)` (proportional to the node flux).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quadrature {
    Charge,
    Flux,
}

impl Quadrature {
    /// Sign in front of `a†`.
    #[inline]
    pub fn dagger_sign(self) -> f64 {
        match self {
            Quadrature::Charge => -1.0,
            Quadrature::Flux => 1.0,
        }
    }

    /// The factor is anti-Hermitian for `Charge`, Hermitian for `Flux`.
    #[inline]
    pub fn adjoint_sign(self) -> f64 {
        self.dagger_sign()
    }

    fn symbol(self) -> &'static str {
        match self {
            Quadrature::Charge => "minus",
            Quadrature::Flux => "plus",
        }
    }
}

/// A bilinear ledger key: `left` acts on mode `i`, `right` on mode `j`,
/// `i <= j`. For `i == j` the product order is significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    pub i: usize,
    pub j: usize,
    pub left: Quadrature,
    pub right: Quadrature,
}

impl PairKey {
    pub fn new(i: usize, j: usize, left: Quadrature, right: Quadrature) -> Self {
        debug_assert!(i <= j);
        PairKey { i, j, left, right }
    }

    /// `minus_plus` means `(a_i - a_i†)(a_j + a_j†)`.
    pub fn form(&self) -> String {
        format!("{}_{}", self.left.symbol(), self.right.symbol())
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = |q: Quadrature, m: usize| match q {
            Quadrature::Charge => format!("(a{m}-a{m}+)"),
            Quadrature::Flux => format!("(a{m}+a{m}+)"),
        };
        write!(f, "{}{}", op(self.left, self.i + 1), op(self.right, self.j + 1))
    }
}

/// Coefficient ledger of the quantum Hamiltonian
///
/// ```text
/// H(t) = sum_i hbar omega_i a_i† a_i + sum_k c_k F_k + cos(2 pi f_drive t) sum_m d_m D_m
/// ```
///
/// with `F_k` the bilinear forms keyed by [`PairKey`] and `D_m` the drive
/// operators `-i (a - a†)` (charge) or `(a + a†)` (flux), both Hermitian.
/// Coefficients are in joules.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderHamiltonian {
    pub omega: [f64; 3],
    pub pairs: BTreeMap<PairKey, Complex64>,
    pub drive: BTreeMap<(usize, Quadrature), f64>,
    pub drive_freq: f64,
}

impl LadderHamiltonian {
    pub fn harmonic(omega: [f64; 3]) -> Self {
        LadderHamiltonian {
            omega,
            pairs: BTreeMap::new(),
            drive: BTreeMap::new(),
            drive_freq: 0.0,
        }
    }

    pub fn add_pair(&mut self, key: PairKey, c: Complex64) {
        *self.pairs.entry(key).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn without_drive(&self) -> Self {
        let mut h = self.clone();
        h.drive.clear();
        h
    }

    /// Ledger of the adjoint operator.
    pub fn adjoint(&self) -> BTreeMap<PairKey, Complex64> {
        let mut out = BTreeMap::new();
        for (key, c) in &self.pairs {
            let sign = key.left.adjoint_sign() * key.right.adjoint_sign();
            // (F_i G_j)† = G_j† F_i†; distinct modes commute so only same-mode
            // products swap order
            let adj_key = if key.i == key.j {
                PairKey::new(key.i, key.j, key.right, key.left)
            } else {
                *key
            };
            *out.entry(adj_key).or_insert(Complex64::new(0.0, 0.0)) += c.conj() * sign;
        }
        out
    }

    /// Coefficient-level Hermiticity: the ledger equals its adjoint within
    /// `tol` times the largest coefficient.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let adj = self.adjoint();
        let scale = self
            .pairs
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let keys: std::collections::BTreeSet<_> = self.pairs.keys().chain(adj.keys()).collect();
        let zero = Complex64::new(0.0, 0.0);
        keys.into_iter().all(|k| {
            let a = self.pairs.get(k).copied().unwrap_or(zero);
            let b = adj.get(k).copied().unwrap_or(zero);
            (a - b).norm() <= tol * scale
        }) && self.omega.iter().all(|w| w.is_finite())
            && self.drive.values().all(|d| d.is_finite())
    }
}

/// A single ladder operator acting on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn a(mode: usize) -> Self {
        Ladder { mode, dagger: false }
    }

    pub fn ad(mode: usize) -> Self {
        Ladder { mode, dagger: true }
    }

    /// Index in the `(a1, a2, a3, a1†, a2†, a3†)` basis.
    pub fn basis_index(self) -> usize {
        self.mode + if self.dagger { 3 } else { 0 }
    }

    /// Interaction-picture phase rate: `a(t) = a e^{-i w t}`, `a†(t) = a† e^{+i w t}`.
    pub fn phase_rate(self, omega: &[f64; 3]) -> f64 {
        if self.dagger {
            omega[self.mode]
        } else {
            -omega[self.mode]
        }
    }
}

/// An ordered product of ladder operators with its coefficient. `driven`
/// monomials are additionally multiplied by `cos(2 pi f_drive t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub ops: Vec<Ladder>,
    pub coeff: Complex64,
    pub driven: bool,
}

impl LadderHamiltonian {
    /// Expand the ledger into normal products of `a` and `a†` in the order
    /// written. Number terms are included only when `with_number` is set.
    pub fn monomials(&self, with_number: bool) -> Vec<Monomial> {
        let mut out = Vec::new();
        if with_number {
            for (m, w) in self.omega.iter().enumerate() {
                out.push(Monomial {
                    ops: vec![Ladder::ad(m), Ladder::a(m)],
                    coeff: Complex64::new(HBAR * w, 0.0),
                    driven: false,
                });
            }
        }
        for (key, &c) in &self.pairs {
            let (sl, sr) = (key.left.dagger_sign(), key.right.dagger_sign());
            for (dl, fl) in [(false, 1.0), (true, sl)] {
                for (dr, fr) in [(false, 1.0), (true, sr)] {
                    out.push(Monomial {
                        ops: vec![
                            Ladder { mode: key.i, dagger: dl },
                            Ladder { mode: key.j, dagger: dr },
                        ],
                        coeff: c * (fl * fr),
                        driven: false,
                    });
                }
            }
        }
        for (&(m, quad), &d) in &self.drive {
            let (ca, cad) = match quad {
                // -i (a - a†)
                Quadrature::Charge => (Complex64::new(0.0, -d), Complex64::new(0.0, d)),
                Quadrature::Flux => (Complex64::new(d, 0.0), Complex64::new(d, 0.0)),
            };
            out.push(Monomial { ops: vec![Ladder::a(m)], coeff: ca, driven: true });
            out.push(Monomial { ops: vec![Ladder::ad(m)], coeff: cad, driven: true });
        }
        out
    }
}

/// Map the quadratic Hamiltonian onto ladder operators using
/// `phi_i = sqrt(hbar Z_i / 2) (a_i + a_i†)` and
/// `Q_i = -i sqrt(hbar / (2 Z_i)) (a_i - a_i†)`.
///
/// The number-operator frequencies are the dressed `omega` of `dp`; whatever
/// the diagonal blocks contain beyond `hbar omega_i a_i† a_i` is kept as
/// same-mode `(a ± a†)^2` ledger entries, so the operator is reproduced
/// exactly up to a constant.
pub fn to_ladder(qh: &QuadraticHamiltonian, dp: &DerivedParams) -> Result<LadderHamiltonian> {
    for i in 0..3 {
        if !(dp.z[i] > 0.0 && dp.omega[i] > 0.0) {
            return Err(QsimError::InvalidParam {
                field: format!("Z/omega of mode {}", i + 1),
                reason: "impedance and frequency must be positive".into(),
            });
        }
    }
    let q_scale: [f64; 3] = std::array::from_fn(|i| (HBAR / (2.0 * dp.z[i])).sqrt());
    let x_scale: [f64; 3] = std::array::from_fn(|i| (HBAR * dp.z[i] / 2.0).sqrt());
    let mut lh = LadderHamiltonian::harmonic(dp.omega);
    lh.drive_freq = qh.f_drive;
    let neg_i = Complex64::new(0.0, -1.0);
    use Quadrature::{Charge, Flux};

    for i in 0..3 {
        for j in (i + 1)..3 {
            let cc = -(qh.a[(i, j)] + qh.a[(j, i)]) * q_scale[i] * q_scale[j];
            push_real(&mut lh, PairKey::new(i, j, Charge, Charge), cc);
            let ff = (qh.b[(i, j)] + qh.b[(j, i)]) * x_scale[i] * x_scale[j];
            push_real(&mut lh, PairKey::new(i, j, Flux, Flux), ff);
        }
    }

    for i in 0..3 {
        for j in 0..3 {
            let s = qh.s[(i, j)];
            if s == 0.0 {
                continue;
            }
            let c = neg_i * (q_scale[i] * x_scale[j] * s);
            if i < j {
                lh.add_pair(PairKey::new(i, j, Charge, Flux), c);
            } else if i > j {
                lh.add_pair(PairKey::new(j, i, Flux, Charge), c);
            } else {
                // Weyl ordering of Q_i phi_i
                lh.add_pair(PairKey::new(i, i, Charge, Flux), c * 0.5);
                lh.add_pair(PairKey::new(i, i, Flux, Charge), c * 0.5);
            }
        }
    }

    for i in 0..3 {
        // -a P^2 + b X^2 = (a+b)(2n+1) + (b-a)(a^2 + a†^2)
        let a = qh.a[(i, i)] * q_scale[i] * q_scale[i];
        let b = qh.b[(i, i)] * x_scale[i] * x_scale[i];
        let hw = HBAR * dp.omega[i];
        let delta = (a + b) - 0.5 * hw;
        let c_xx = 0.5 * ((b - a) + delta);
        let c_pp = 0.5 * ((b - a) - delta);
        let floor = 1e-14 * hw;
        if c_xx.abs() > floor {
            lh.add_pair(PairKey::new(i, i, Flux, Flux), Complex64::new(c_xx, 0.0));
        }
        if c_pp.abs() > floor {
            lh.add_pair(PairKey::new(i, i, Charge, Charge), Complex64::new(c_pp, 0.0));
        }
    }

    for i in 0..3 {
        let dq = qh.v_in * qh.d_q[i] * q_scale[i];
        if dq != 0.0 {
            lh.drive.insert((i, Charge), dq);
        }
        let dphi = qh.v_in * qh.d_phi[i] * x_scale[i];
        if dphi != 0.0 {
            lh.drive.insert((i, Flux), dphi);
        }
    }
    lh.pairs.retain(|_, c| c.norm() != 0.0);
    Ok(lh)
}

fn push_real(lh: &mut LadderHamiltonian, key: PairKey, v: f64) {
    if v != 0.0 {
        lh.add_pair(key, Complex64::new(v, 0.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_capacitance_matrix, derive_params, MatrixSource};

    const PF: f64 = 1e-12;
    const NH: f64 = 1e-9;

    fn pipeline(p: &CircuitParams) -> (QuadraticHamiltonian, DerivedParams, LadderHamiltonian) {
        let cm = build_capacitance_matrix(p, MatrixSource::NodeTotals).unwrap();
        let dp = derive_params(p, &cm).unwrap();
        let qh = legendre_transform(p, &cm).unwrap();
        let lh = to_ladder(&qh, &dp).unwrap();
        (qh, dp, lh)
    }

    #[test]
    fn uncoupled_trio_is_textbook() {
        let mut p = CircuitParams::uncoupled(NH, PF);
        p.c2 = 2.0 * PF;
        p.l3 = 3.0 * NH;
        let (qh, dp, lh) = pipeline(&p);
        let caps = [p.c1, p.c2, p.c3];
        let inds = [p.l1, p.l2, p.l3];
        for i in 0..3 {
            assert!((qh.a[(i, i)] - 0.5 / caps[i]).abs() < 1e-12 * qh.a[(i, i)]);
            assert!((qh.b[(i, i)] - 0.5 / inds[i]).abs() < 1e-12 * qh.b[(i, i)]);
            let w = 1.0 / (inds[i] * caps[i]).sqrt();
            assert!((lh.omega[i] - w).abs() < 1e-12 * w);
            assert_eq!(dp.omega[i], lh.omega[i]);
        }
        assert_eq!(qh.s, Matrix3::zeros());
        assert_eq!(qh.d_q, Vector3::zeros());
        assert_eq!(qh.d_phi, Vector3::zeros());
        assert!(lh.pairs.is_empty(), "{:?}", lh.pairs);
        assert!(lh.drive.is_empty());
    }

    #[test]
    fn gm1_only_confines_charge_flux_block_to_node2_column() {
        let mut p = CircuitParams::uncoupled(NH, PF);
        p.gm1 = 5e-3;
        p.cds1 = 0.1 * PF;
        let (qh, _, lh) = pipeline(&p);
        assert!(qh.s.amax() > 0.0);
        for i in 0..3 {
            assert_eq!(qh.s[(i, 0)], 0.0);
            assert_eq!(qh.s[(i, 2)], 0.0);
        }
        assert!(lh.is_hermitian(1e-12));
    }

    #[test]
    fn single_cross_charge_term_expands_by_hand() {
        let mut qh = legendre_transform(
            &CircuitParams::uncoupled(NH, PF),
            &build_capacitance_matrix(&CircuitParams::uncoupled(NH, PF), MatrixSource::NodeTotals)
                .unwrap(),
        )
        .unwrap();
        let p = CircuitParams::uncoupled(NH, PF);
        let cm = build_capacitance_matrix(&p, MatrixSource::NodeTotals).unwrap();
        let dp = derive_params(&p, &cm).unwrap();
        let a12 = 0.05 / PF;
        qh.a[(0, 1)] = a12;
        qh.a[(1, 0)] = a12;
        let lh = to_ladder(&qh, &dp).unwrap();
        assert_eq!(lh.pairs.len(), 1);
        let (key, c) = lh.pairs.iter().next().unwrap();
        assert_eq!(*key, PairKey::new(0, 1, Quadrature::Charge, Quadrature::Charge));
        // Q1 Q2 appears twice in the double sum, Q_i = -i sqrt(hbar/2Z)(a - a†)
        let expect = -2.0 * a12 * HBAR / (2.0 * (dp.z[0] * dp.z[1]).sqrt());
        assert!((c.re - expect).abs() < 1e-12 * expect.abs());
        assert_eq!(c.im, 0.0);
    }

    #[test]
    fn zero_gm_gives_only_real_couplings() {
        let mut p = CircuitParams::uncoupled(NH, PF);
        p.cds1 = 0.2 * PF;
        p.cgs1 = 0.1 * PF;
        p.c_in = 0.3 * PF;
        let (_, _, lh) = pipeline(&p);
        assert!(!lh.pairs.is_empty());
        for (key, c) in &lh.pairs {
            assert_eq!(key.left, key.right, "{key}");
            assert_eq!(c.im, 0.0);
        }
    }

    #[test]
    fn drive_terms_follow_input_capacitance() {
        let mut p = CircuitParams::uncoupled(NH, PF);
        p.c_in = 0.2 * PF;
        p.v_in = 1e-9;
        p.f_drive = 5e9;
        p.gm1 = 2e-3;
        let (qh, _, lh) = pipeline(&p);
        assert!(qh.d_q[0] > 0.0);
        assert!(lh.drive.contains_key(&(0, Quadrature::Charge)));
        // gm1 couples the drive into the node-2 flux
        assert!(lh.drive.contains_key(&(1, Quadrature::Flux)));
        assert_eq!(lh.drive_freq, 5e9);
    }

    #[test]
    fn adjoint_of_same_mode_mixed_product() {
        let mut lh = LadderHamiltonian::harmonic([1.0; 3]);
        let c = Complex64::new(0.0, 2.0);
        lh.add_pair(PairKey::new(2, 2, Quadrature::Charge, Quadrature::Flux), c);
        assert!(!lh.is_hermitian(1e-12));
        lh.add_pair(PairKey::new(2, 2, Quadrature::Flux, Quadrature::Charge), c);
        assert!(lh.is_hermitian(1e-12));
    }

    #[test]
    fn form_strings() {
        let k = PairKey::new(0, 2, Quadrature::Charge, Quadrature::Flux);
        assert_eq!(k.form(), "minus_plus");
        assert_eq!(k.to_string(), "(a1-a1+)(a3+a3+)");
    }
}
