//! Linear quantum Langevin equations, input-output scattering and gain sweeps.
//!
//! With `v = (a1, a2, a3, a1†, a2†, a3†)` the Heisenberg-Langevin equations
//! read `dv/dt = M v - K v_in`, and with `a_out = K v - v_in` the
//! frequency-domain solution `v(w) = -(M + i w)^-1 K v_in(w)` gives
//!
//! ```text
//! S(w) = -K (M + i w)^-1 K - I.
//! ```

use nalgebra::{Matrix6, SVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QsimError, Result};
use crate::evolve::{BathSpec, Mat6};
use crate::quantization::{Ladder, LadderHamiltonian};
use crate::units::HBAR;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Gains below this floor are clipped so that every sweep entry is finite.
pub const GAIN_FLOOR_DB: f64 = -300.0;
/// Minimum prominence of a reported gain peak.
pub const PEAK_PROMINENCE_DB: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    /// Drift in rad/s over `(a1, a2, a3, a1†, a2†, a3†)`.
    pub m: Mat6,
    /// Diagonal of the input coupling, `sqrt(kappa)` repeated for the daggered rows.
    pub k: [f64; 6],
}

/// `[x, y]` for single ladder operators.
fn ladder_commutator(x: Ladder, y: Ladder) -> f64 {
    if x.mode != y.mode || x.dagger == y.dagger {
        0.0
    } else if y.dagger {
        1.0
    } else {
        -1.0
    }
}

fn basis(k: usize) -> Ladder {
    if k < 3 { Ladder::a(k) } else { Ladder::ad(k - 3) }
}

/// Drift matrix from `-(i/hbar) [v_k, H] - (kappa_k / 2) v_k`, expanded term by
/// term over the ledger. The drive only shifts the operating point and is left
/// out.
pub fn drift_matrix(lh: &LadderHamiltonian, bath: &BathSpec) -> DriftMatrix {
    let mut m = Mat6::zeros();
    let scale = -I / HBAR;
    for mono in lh.monomials(true) {
        if mono.driven || mono.ops.len() != 2 {
            continue;
        }
        let (o1, o2) = (mono.ops[0], mono.ops[1]);
        for k in 0..6 {
            let v = basis(k);
            // [v, o1 o2] = [v, o1] o2 + o1 [v, o2]
            let c1 = ladder_commutator(v, o1);
            if c1 != 0.0 {
                m[(k, o2.basis_index())] += scale * mono.coeff * c1;
            }
            let c2 = ladder_commutator(v, o2);
            if c2 != 0.0 {
                m[(k, o1.basis_index())] += scale * mono.coeff * c2;
            }
        }
    }
    let mut k = [0.0; 6];
    for i in 0..3 {
        let half = Complex64::new(0.5 * bath.kappa[i], 0.0);
        m[(i, i)] -= half;
        m[(3 + i, 3 + i)] -= half;
        k[i] = bath.kappa[i].sqrt();
        k[3 + i] = k[i];
    }
    DriftMatrix { m, k }
}

impl DriftMatrix {
    /// Largest violation of `M[3+i, 3+j] = conj M[i, j]` and
    /// `M[3+i, j] = conj M[i, 3+j]`.
    pub fn conjugation_error(&self) -> f64 {
        pairing_error(&self.m)
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let ev = self.m.schur().eigenvalues().expect("complex Schur always yields eigenvalues");
        ev.iter().copied().collect()
    }

    /// Eigenvalue with the largest real part.
    pub fn leading_eigenvalue(&self) -> Complex64 {
        self.eigenvalues()
            .into_iter()
            .fold(Complex64::new(f64::NEG_INFINITY, 0.0), |a, b| if b.re > a.re { b } else { a })
    }

    /// Real parts up to this bound count as stable. The relative part covers
    /// the rounding of the eigensolver on lossless blocks.
    pub fn stability_tolerance(&self) -> f64 {
        1e-9 + 1e-12 * self.m.camax()
    }

    pub fn check_stable(&self) -> Result<()> {
        let lead = self.leading_eigenvalue();
        if lead.re > self.stability_tolerance() {
            return Err(QsimError::Unstable { re: lead.re, im: lead.im });
        }
        Ok(())
    }
}

fn pairing_error(m: &Mat6) -> f64 {
    let mut err: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            err = err.max((m[(3 + i, 3 + j)] - m[(i, j)].conj()).norm());
            err = err.max((m[(3 + i, j)] - m[(i, 3 + j)].conj()).norm());
        }
    }
    err
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub omega: f64,
    pub s: Mat6,
    /// 2-norm condition number of `M + i omega`.
    pub cond: f64,
}

/// `S(omega) = -K (M + i omega)^-1 K - I`.
pub fn scattering(dm: &DriftMatrix, omega: f64) -> Result<ScatteringMatrix> {
    let mut r = dm.m;
    for d in 0..6 {
        r[(d, d)] += I * omega;
    }
    let sv = r.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-14 * smax) {
        return Err(QsimError::SingularResolvent { omega });
    }
    let k = Matrix6::from_diagonal(&SVector::<Complex64, 6>::from_fn(|i, _| Complex64::new(dm.k[i], 0.0)));
    let x = r.lu().solve(&k).ok_or(QsimError::SingularResolvent { omega })?;
    let s = -(k * x) - Mat6::identity();
    Ok(ScatteringMatrix {
        omega,
        s,
        cond: smax / smin,
    })
}

impl ScatteringMatrix {
    /// Pairing between `S(omega)` and `S(-omega)`: daggered channels at `-omega`
    /// are the conjugates of undaggered channels at `omega`.
    pub fn pairing_error(&self, mirrored: &ScatteringMatrix) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                let (ci, cj) = ((i + 3) % 6, (j + 3) % 6);
                err = err.max((mirrored.s[(ci, cj)] - self.s[(i, j)].conj()).norm());
            }
        }
        err
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub f_lo: f64,
    pub f_hi: f64,
    pub n_points: usize,
    pub port_in: usize,
    pub port_out: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            f_lo: 4e9,
            f_hi: 9e9,
            n_points: 2001,
            port_in: 0,
            port_out: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub freq: f64,
    pub gain_db: f64,
    pub prominence_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSweep {
    pub freqs: Vec<f64>,
    pub signal_gain_db: Vec<f64>,
    pub idler_gain_db: Vec<f64>,
    pub cond: Vec<f64>,
    pub signal_peaks: Vec<Peak>,
    pub idler_peaks: Vec<Peak>,
    pub spec: SweepSpec,
}

fn to_db(x: Complex64) -> f64 {
    (10.0 * x.norm_sqr().log10()).max(GAIN_FLOOR_DB)
}

/// Signal `|S[out, in]|^2` and idler `|S[out, in†]|^2` over a linear grid.
/// Refuses self-oscillating systems.
pub fn gain_sweep(dm: &DriftMatrix, spec: &SweepSpec) -> Result<GainSweep> {
    if !(spec.f_lo < spec.f_hi) || spec.n_points < 2 {
        return Err(crate::error::invalid(
            "sweep",
            format!(
                "need f_lo < f_hi and at least 2 points, got [{}, {}] with {}",
                spec.f_lo, spec.f_hi, spec.n_points
            ),
        ));
    }
    if spec.port_in >= 3 || spec.port_out >= 6 {
        return Err(crate::error::invalid(
            "sweep",
            format!("ports out of range: in {} out {}", spec.port_in, spec.port_out),
        ));
    }
    dm.check_stable()?;
    let step = (spec.f_hi - spec.f_lo) / (spec.n_points - 1) as f64;
    let freqs: Vec<f64> = (0..spec.n_points)
        .map(|k| if k + 1 == spec.n_points { spec.f_hi } else { spec.f_lo + step * k as f64 })
        .collect();
    let rows: Vec<(f64, f64, f64)> = freqs
        .par_iter()
        .map(|&f| {
            let sm = scattering(dm, 2.0 * std::f64::consts::PI * f)?;
            Ok((
                to_db(sm.s[(spec.port_out, spec.port_in)]),
                to_db(sm.s[(spec.port_out, spec.port_in + 3)]),
                sm.cond,
            ))
        })
        .collect::<Result<_>>()?;
    let signal_gain_db: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let idler_gain_db: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(GainSweep {
        signal_peaks: find_peaks(&freqs, &signal_gain_db, PEAK_PROMINENCE_DB),
        idler_peaks: find_peaks(&freqs, &idler_gain_db, PEAK_PROMINENCE_DB),
        cond: rows.iter().map(|r| r.2).collect(),
        freqs,
        signal_gain_db,
        idler_gain_db,
        spec: *spec,
    })
}

/// Interior local maxima whose topographic prominence exceeds `min_prominence`.
pub fn find_peaks(x: &[f64], y: &[f64], min_prominence: f64) -> Vec<Peak> {
    let n = y.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            // walk across a plateau
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let mid = (i + j) / 2;
                let h = y[i];
                let mut left_min = h;
                for k in (0..i).rev() {
                    if y[k] > h {
                        break;
                    }
                    left_min = left_min.min(y[k]);
                }
                let mut right_min = h;
                for &v in &y[j + 1..] {
                    if v > h {
                        break;
                    }
                    right_min = right_min.min(v);
                }
                let prominence = h - left_min.max(right_min);
                if prominence > min_prominence {
                    peaks.push(Peak {
                        freq: x[mid],
                        gain_db: h,
                        prominence_db: prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

impl GainSweep {
    /// Highest signal peak, if any.
    pub fn dominant_peak(&self) -> Option<Peak> {
        self.signal_peaks
            .iter()
            .copied()
            .fold(None, |best: Option<Peak>, p| match best {
                Some(b) if b.gain_db >= p.gain_db => Some(b),
                _ => Some(p),
            })
    }
}

/// Bisection for the parameter where the leading real part of the drift
/// crosses zero. `f(lo)` must be stable and `f(hi)` unstable.
pub fn stability_threshold<F>(mut drift_at: F, mut lo: f64, mut hi: f64, iterations: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<DriftMatrix>,
{
    let growth = |dm: &DriftMatrix| dm.leading_eigenvalue().re - dm.stability_tolerance();
    if growth(&drift_at(lo)?) > 0.0 || growth(&drift_at(hi)?) <= 0.0 {
        return Err(crate::error::invalid(
            "threshold bracket",
            format!("[{lo:e}, {hi:e}] does not bracket the onset of instability"),
        ));
    }
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if growth(&drift_at(mid)?) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::moment_generator;
    use crate::quantization::{PairKey, Quadrature};

    fn bath(kappa: [f64; 3]) -> BathSpec {
        BathSpec::with_occupations(0.0, [0.0; 3], kappa).unwrap()
    }

    #[test]
    fn uncoupled_mode_is_damped_oscillator() {
        let w = [2e10, 3e10, 4e10];
        let dm = drift_matrix(&LadderHamiltonian::harmonic(w), &bath([1e8, 2e8, 3e8]));
        for i in 0..3 {
            let k = 1e8 * (i + 1) as f64;
            assert!((dm.m[(i, i)] - Complex64::new(-k / 2.0, -w[i])).norm() < 1e-14 * w[i]);
            assert!((dm.m[(3 + i, 3 + i)] - Complex64::new(-k / 2.0, w[i])).norm() < 1e-14 * w[i]);
        }
        assert_eq!(dm.conjugation_error(), 0.0);
    }

    #[test]
    fn charge_charge_coupling_by_hand() {
        // H = hbar w (a†a + b†b) + g (a - a†)(b - b†):
        // [a, H] = hbar w a - g (b - b†)
        let mut lh = LadderHamiltonian::harmonic([1e10, 1e10, 1e10]);
        let g = HBAR * 1e8;
        lh.add_pair(PairKey::new(0, 1, Quadrature::Charge, Quadrature::Charge), Complex64::new(g, 0.0));
        let dm = drift_matrix(&lh, &bath([0.0; 3]));
        let gr = g / HBAR;
        assert!((dm.m[(0, 1)] - I * gr).norm() < 1e-6);
        assert!((dm.m[(0, 4)] + I * gr).norm() < 1e-6);
        assert!((dm.m[(3, 4)] + I * gr).norm() < 1e-6);
        assert!((dm.m[(3, 1)] - I * gr).norm() < 1e-6);
        assert!(dm.conjugation_error() < 1e-9);
    }

    #[test]
    fn agrees_with_moment_flow_drift() {
        let mut lh = LadderHamiltonian::harmonic([3e10, 5e10, 3.3e10]);
        for (k, (l, r)) in [
            (Quadrature::Charge, Quadrature::Flux),
            (Quadrature::Flux, Quadrature::Flux),
            (Quadrature::Charge, Quadrature::Charge),
        ]
        .into_iter()
        .enumerate()
        {
            let c = Complex64::new(HBAR * 1e8 * (k as f64 + 1.0), 0.0);
            lh.add_pair(PairKey::new(k % 2, 2, l, r), if l != r { c * I } else { c });
        }
        lh.add_pair(PairKey::new(1, 1, Quadrature::Flux, Quadrature::Flux), Complex64::new(HBAR * 4e8, 0.0));
        let b = bath([1e8, 3e7, 2e8]);
        let dm = drift_matrix(&lh, &b);
        let mg = moment_generator(&lh, &b);
        assert!((dm.m - mg.drift).camax() <= 1e-8 * mg.drift.camax());
    }

    #[test]
    fn empty_cavity_is_all_pass() {
        let dm = drift_matrix(&LadderHamiltonian::harmonic([3e10, 4e10, 5e10]), &bath([1e8, 1e8, 1e8]));
        for f in [4e9, 4.77e9, 6e9, 9e9] {
            let s = scattering(&dm, 2.0 * std::f64::consts::PI * f).unwrap();
            for c in 0..6 {
                assert!((s.s[(c, c)].norm() - 1.0).abs() < 1e-12);
            }
            let mirrored = scattering(&dm, -2.0 * std::f64::consts::PI * f).unwrap();
            assert!(s.pairing_error(&mirrored) < 1e-12);
        }
        let dm0 = drift_matrix(&LadderHamiltonian::harmonic([3e10, 4e10, 5e10]), &bath([0.0; 3]));
        assert_eq!(scattering(&dm0, 1e10).unwrap().s, -Mat6::identity());
        assert!(matches!(scattering(&dm0, 3e10), Err(QsimError::SingularResolvent { .. })));
    }

    #[test]
    fn peak_finder() {
        let x: Vec<f64> = (0..9).map(|k| k as f64).collect();
        let y = [0.0, 3.0, 0.0, 0.5, 1.0, 1.0, 0.2, 5.0, 4.0];
        let p = find_peaks(&x, &y, 0.5);
        assert_eq!(p.len(), 3);
        assert_eq!(p[0].freq, 1.0);
        assert!((p[0].prominence_db - 3.0).abs() < 1e-15);
        assert_eq!(p[1].freq, 4.0);
        assert!((p[1].prominence_db - 0.8).abs() < 1e-15);
        // the right base is the grid edge at 4
        assert!((p[2].prominence_db - 1.0).abs() < 1e-15);
        assert_eq!(find_peaks(&x, &y, 1.0).len(), 1);
    }

    #[test]
    fn unstable_sweep_is_refused() {
        let mut dm = drift_matrix(&LadderHamiltonian::harmonic([3e10, 4e10, 5e10]), &bath([1e8; 3]));
        dm.m[(1, 1)] += Complex64::new(1e8, 0.0);
        dm.m[(4, 4)] += Complex64::new(1e8, 0.0);
        match gain_sweep(&dm, &SweepSpec::default()) {
            Err(QsimError::Unstable { re, .. }) => assert!((re - 5e7).abs() < 1.0),
            other => panic!("{other:?}"),
        }
    }
}
