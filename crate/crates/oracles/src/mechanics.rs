//! Classical circuit mechanics written out node by node.

use nalgebra::{Matrix3, Vector3};
use qsim_core::circuit::CircuitParams;

/// Kinetic matrix of the node-total reading.
pub fn kinetic_matrix(p: &CircuitParams) -> Matrix3<f64> {
    let n1 = p.c1 + p.c_in + p.cgs1 + p.cds1;
    let n2 = p.c2 + p.cds1 - p.cgs2;
    let n3 = p.c3 + p.cds2 + p.c_out;
    Matrix3::new(n1, -p.cds1, 0.0, -p.cds1, n2, 0.0, 0.0, 0.0, n3)
}

/// `L(phi, phidot)` at drive voltage `v`, including the constant
/// `Cin v^2 / 2` from expanding the input capacitor.
pub fn lagrangian(p: &CircuitParams, m: &Matrix3<f64>, phi: &Vector3<f64>, dphi: &Vector3<f64>, v: f64) -> f64 {
    let kinetic = 0.5 * dphi.dot(&(m * dphi));
    let input = 0.5 * p.c_in * v * v - p.c_in * v * dphi[0];
    let transconductance = -p.gm1 * dphi[0] * phi[1] + p.gm2 * dphi[1] * (phi[2] - phi[1]);
    let inductive = phi[0] * phi[0] / (2.0 * p.l1) + phi[1] * phi[1] / (2.0 * p.l2) + phi[2] * phi[2] / (2.0 * p.l3);
    kinetic + input + transconductance - inductive
}

/// `dL/dphidot`.
pub fn conjugate_charges(p: &CircuitParams, m: &Matrix3<f64>, phi: &Vector3<f64>, dphi: &Vector3<f64>, v: f64) -> Vector3<f64> {
    m * dphi + Vector3::new(-p.c_in * v - p.gm1 * phi[1], p.gm2 * (phi[2] - phi[1]), 0.0)
}

/// Velocities for given charges, by solving the linear system directly.
pub fn velocities(p: &CircuitParams, m: &Matrix3<f64>, phi: &Vector3<f64>, q: &Vector3<f64>, v: f64) -> Vector3<f64> {
    let rhs = q - Vector3::new(-p.c_in * v - p.gm1 * phi[1], p.gm2 * (phi[2] - phi[1]), 0.0);
    m.lu().solve(&rhs).expect("invertible kinetic matrix")
}

/// `sum Q phidot - L`, together with the sum of term magnitudes for a
/// relative-error scale.
pub fn hamiltonian(p: &CircuitParams, m: &Matrix3<f64>, phi: &Vector3<f64>, q: &Vector3<f64>, v: f64) -> (f64, f64) {
    let dphi = velocities(p, m, phi, q, v);
    let qd = q.dot(&dphi);
    let l = lagrangian(p, m, phi, &dphi, v);
    let scale = q.component_mul(&dphi).abs().sum()
        + 0.5 * dphi.dot(&(m * dphi)).abs()
        + (p.gm1 * dphi[0] * phi[1]).abs()
        + (p.gm2 * dphi[1] * (phi[2] - phi[1])).abs()
        + phi[0] * phi[0] / (2.0 * p.l1)
        + phi[1] * phi[1] / (2.0 * p.l2)
        + phi[2] * phi[2] / (2.0 * p.l3)
        + (p.c_in * v * dphi[0]).abs();
    (qd - l, scale)
}
