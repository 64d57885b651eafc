//! Dense Kronecker-product operators and a naive master-equation integrator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qsim_core::evolve::BathSpec;
use qsim_core::quantization::{LadderHamiltonian, Quadrature};
use qsim_core::units::HBAR;

pub type CMat = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Single-mode annihilation operator on `d` levels.
pub fn destroy(d: usize) -> CMat {
    let mut a = CMat::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let s = a[(i, j)];
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `op` acting on `mode`, identity elsewhere; mode 0 is the most
/// significant factor.
pub fn embed(dims: [usize; 3], mode: usize, op: &CMat) -> CMat {
    let f = |m: usize| if m == mode { op.clone() } else { CMat::identity(dims[m], dims[m]) };
    kron(&kron(&f(0), &f(1)), &f(2))
}

pub fn annihilators(dims: [usize; 3]) -> [CMat; 3] {
    std::array::from_fn(|m| embed(dims, m, &destroy(dims[m])))
}

fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

fn quadrature(a: &CMat, q: Quadrature) -> CMat {
    match q {
        Quadrature::Charge => a - dagger(a),
        Quadrature::Flux => a + dagger(a),
    }
}

/// Hamiltonian (joules) at time `t`.
pub fn hamiltonian(lh: &LadderHamiltonian, dims: [usize; 3], t: f64) -> CMat {
    let a = annihilators(dims);
    let n: usize = dims.iter().product();
    let mut h = CMat::zeros(n, n);
    for m in 0..3 {
        h += (dagger(&a[m]) * &a[m]) * Complex64::new(HBAR * lh.omega[m], 0.0);
    }
    for (key, c) in &lh.pairs {
        h += quadrature(&a[key.i], key.left) * quadrature(&a[key.j], key.right) * *c;
    }
    let cosine = (2.0 * std::f64::consts::PI * lh.drive_freq * t).cos();
    for ((m, q), d) in &lh.drive {
        let op = match q {
            Quadrature::Charge => (&a[*m] - dagger(&a[*m])) * (-I),
            Quadrature::Flux => &a[*m] + dagger(&a[*m]),
        };
        h += op * Complex64::new(d * cosine, 0.0);
    }
    h
}

/// Right-hand side of the thermal master equation, written out directly.
pub fn lindblad_rhs(lh: &LadderHamiltonian, bath: &BathSpec, dims: [usize; 3], t: f64, rho: &CMat) -> CMat {
    let h = hamiltonian(lh, dims, t);
    let mut out = (&h * rho - rho * &h) * (-I / HBAR);
    let a = annihilators(dims);
    for m in 0..3 {
        let (k, nb) = (bath.kappa[m], bath.nbar[m]);
        for (rate, l) in [(k * (nb + 1.0), a[m].clone()), (k * nb, dagger(&a[m]))] {
            if rate == 0.0 {
                continue;
            }
            let ld = dagger(&l);
            let ldl = &ld * &l;
            let d = &l * rho * &ld - (&ldl * rho + rho * &ldl) * Complex64::new(0.5, 0.0);
            out += d * Complex64::new(rate, 0.0);
        }
    }
    out
}

/// Fixed-step RK4 from `t0` to `t1`.
pub fn integrate(
    lh: &LadderHamiltonian,
    bath: &BathSpec,
    dims: [usize; 3],
    rho0: &CMat,
    t0: f64,
    t1: f64,
    steps: usize,
) -> CMat {
    let h = (t1 - t0) / steps as f64;
    let half = Complex64::new(0.5 * h, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut rho = rho0.clone();
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = lindblad_rhs(lh, bath, dims, t, &rho);
        let k2 = lindblad_rhs(lh, bath, dims, t + 0.5 * h, &(&rho + &k1 * half));
        let k3 = lindblad_rhs(lh, bath, dims, t + 0.5 * h, &(&rho + &k2 * half));
        let k4 = lindblad_rhs(lh, bath, dims, t + h, &(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    rho
}

/// `<v_k v_l>` over `(a1, a2, a3, a1†, a2†, a3†)` by explicit traces.
pub fn second_moments(rho: &CMat, dims: [usize; 3]) -> DMatrix<Complex64> {
    let a = annihilators(dims);
    let v: Vec<CMat> = (0..6).map(|k| if k < 3 { a[k].clone() } else { dagger(&a[k - 3]) }).collect();
    DMatrix::from_fn(6, 6, |k, l| (rho * &v[k] * &v[l]).trace())
}

/// Tensor product of single-mode thermal states.
pub fn thermal(dims: [usize; 3], nbar: [f64; 3]) -> CMat {
    let single = |d: usize, n: f64| {
        let mut m = CMat::zeros(d, d);
        let w: Vec<f64> = (0..d).map(|k| (n / (n + 1.0)).powi(k as i32)).collect();
        let z: f64 = w.iter().sum();
        for k in 0..d {
            m[(k, k)] = Complex64::new(w[k] / z, 0.0);
        }
        m
    };
    kron(&kron(&single(dims[0], nbar[0]), &single(dims[1], nbar[1])), &single(dims[2], nbar[2]))
}
