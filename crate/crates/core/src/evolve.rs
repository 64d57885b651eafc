//! Open-system time evolution: the Fock-space Lindblad equation and the
//! closed Gaussian moment flow.
//!
//! Both solve
//!
//! ```text
//! drho/dt = -(i/hbar)[H(t), rho] + sum_i kappa_i (nbar_i + 1) D[a_i] rho + kappa_i nbar_i D[a_i†] rho
//! D[L] rho = L rho L† - {L† L, rho} / 2
//! ```
//!
//! The Fock path integrates in the interaction picture of
//! `H0 = sum hbar omega_i a_i† a_i`, which removes the carrier rotation; all
//! reported moments are in the lab frame.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SMatrix, SVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QsimError, Result};
use crate::fock::{DensityMatrix, FockSpace, RowMap};
use crate::ode::{integrate, OdeOptions, OdeStats};
use crate::quantization::{Ladder, LadderHamiltonian, PairKey};
use crate::units::{HBAR, K_B};

pub type Vec6 = SVector<Complex64, 6>;
pub type Mat6 = SMatrix<Complex64, 6, 6>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Bose-Einstein occupation `1 / (exp(hbar omega / k_B T) - 1)`, 0 at `T = 0`.
pub fn bath_occupation(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * t)).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub t_bath: f64,
    pub nbar: [f64; 3],
    pub kappa: [f64; 3],
}

impl BathSpec {
    /// Thermal bath at `t_bath` seen by modes of frequency `omega`.
    pub fn thermal(t_bath: f64, omega: [f64; 3], kappa: [f64; 3]) -> Result<Self> {
        if !(t_bath >= 0.0) || !t_bath.is_finite() {
            return Err(QsimError::InvalidParam {
                field: "T_bath".into(),
                reason: "must be finite and >= 0".into(),
            });
        }
        for (m, w) in omega.iter().enumerate() {
            if !(*w > 0.0) {
                return Err(QsimError::InvalidParam {
                    field: format!("w{0}{0}", m + 1),
                    reason: "mode frequency must be positive".into(),
                });
            }
        }
        Self::with_occupations(t_bath, omega.map(|w| bath_occupation(w, t_bath)), kappa)
    }

    /// Bath with explicitly given occupations.
    pub fn with_occupations(t_bath: f64, nbar: [f64; 3], kappa: [f64; 3]) -> Result<Self> {
        for m in 0..3 {
            if !(kappa[m] >= 0.0) || !kappa[m].is_finite() {
                return Err(QsimError::InvalidParam {
                    field: format!("kappa{}", m + 1),
                    reason: "must be finite and >= 0".into(),
                });
            }
            if !(nbar[m] >= 0.0) || !nbar[m].is_finite() {
                return Err(QsimError::InvalidParam {
                    field: format!("nbar{}", m + 1),
                    reason: "must be finite and >= 0".into(),
                });
            }
        }
        Ok(BathSpec { t_bath, nbar, kappa })
    }

    /// Emission rate `kappa (nbar + 1)` and absorption rate `kappa nbar`.
    pub fn rates(&self, mode: usize) -> (f64, f64) {
        let k = self.kappa[mode];
        (k * (self.nbar[mode] + 1.0), k * self.nbar[mode])
    }
}

/// `kappa_i = omega_i / Q`.
pub fn kappa_from_quality(omega: [f64; 3], q: f64) -> [f64; 3] {
    omega.map(|w| w / q)
}

/// First and second moments over `v = (a1, a2, a3, a1†, a2†, a3†)`:
/// `mean[k] = <v_k>`, `second[(k, l)] = <v_k v_l>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub mean: Vec6,
    pub second: Mat6,
    pub t: f64,
}

impl MomentState {
    pub fn vacuum(t: f64) -> Self {
        Self::diagonal([0.0; 3], t)
    }

    /// Uncorrelated modes with `<a_i† a_i> = n_i` and no coherence; covers
    /// thermal and Fock states alike.
    pub fn diagonal(n: [f64; 3], t: f64) -> Self {
        let mut second = Mat6::zeros();
        for i in 0..3 {
            second[(3 + i, i)] = Complex64::new(n[i], 0.0);
            second[(i, 3 + i)] = Complex64::new(n[i] + 1.0, 0.0);
        }
        MomentState {
            mean: Vec6::zeros(),
            second,
            t,
        }
    }

    /// Coherent amplitudes `alpha` on top of `self`.
    pub fn displaced(&self, alpha: [Complex64; 3]) -> Self {
        let mut out = self.clone();
        let mut d = Vec6::zeros();
        for i in 0..3 {
            d[i] = alpha[i];
            d[3 + i] = alpha[i].conj();
        }
        out.second += d * self.mean.transpose() + self.mean * d.transpose() + d * d.transpose();
        out.mean += d;
        out
    }

    pub fn photon_numbers(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.second[(3 + i, i)].re)
    }

    /// `<a_i† a_j>`.
    pub fn normal(&self, i: usize, j: usize) -> Complex64 {
        self.second[(3 + i, j)]
    }

    /// `<a_i a_j>`.
    pub fn anomalous(&self, i: usize, j: usize) -> Complex64 {
        self.second[(i, j)]
    }

    /// Max deviation from `<v_k v_l>* = <v_l~ v_k~>`, where `~` swaps
    /// daggered and undaggered entries.
    pub fn conjugation_error(&self) -> f64 {
        let bar = |k: usize| (k + 3) % 6;
        let mut worst = 0.0_f64;
        for k in 0..6 {
            worst = worst.max((self.mean[k].conj() - self.mean[bar(k)]).norm());
            for l in 0..6 {
                worst = worst.max((self.second[(k, l)].conj() - self.second[(bar(l), bar(k))]).norm());
            }
        }
        worst
    }

    /// Max deviation of `<[v_k, v_l]>` from the canonical `J_kl`.
    pub fn commutator_error(&self) -> f64 {
        let j = symplectic_j();
        let mut worst = 0.0_f64;
        for k in 0..6 {
            for l in 0..6 {
                let c = self.second[(k, l)] - self.second[(l, k)];
                worst = worst.max((c - j[(k, l)]).norm());
            }
        }
        worst
    }

    /// Check the stated invariants: conjugation symmetry and real,
    /// non-negative photon numbers.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let e = self.conjugation_error();
        if e > tol {
            return Err(QsimError::InvalidState {
                reason: format!("moments violate conjugation symmetry by {e:e}"),
            });
        }
        for i in 0..3 {
            let n = self.second[(3 + i, i)];
            if n.im.abs() > tol || n.re < -tol {
                return Err(QsimError::InvalidState {
                    reason: format!("<a{0}+ a{0}> = {n} is not real and non-negative", i + 1),
                });
            }
        }
        Ok(())
    }

    /// Moments of a lab-frame density matrix.
    pub fn from_density(rho: &DensityMatrix, t: f64) -> Self {
        let space = rho.space();
        let maps = LadderMaps::new(&space);
        let n = space.total_dim();
        let flat: Vec<Complex64> = rho.matrix().as_slice().to_vec();
        debug_assert_eq!(flat.len(), n * n);
        maps.moments(&flat, n, [0.0; 3], 0.0, t)
    }

    /// Largest absolute difference over means and second moments.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let m = (self.mean - other.mean).iter().map(|c| c.norm()).fold(0.0, f64::max);
        let s = (self.second - other.second).iter().map(|c| c.norm()).fold(0.0, f64::max);
        m.max(s)
    }
}

/// `J_kl = [v_k, v_l]` for the `(a, a†)` basis.
pub fn symplectic_j() -> Mat6 {
    let mut j = Mat6::zeros();
    for i in 0..3 {
        j[(i, 3 + i)] = Complex64::new(1.0, 0.0);
        j[(3 + i, i)] = Complex64::new(-1.0, 0.0);
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Fock,
    MomentFlow,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Fock => "fock",
            Solver::MomentFlow => "moment_flow",
        }
    }
}

/// Per-sample health of a Fock-path run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockDiagnostics {
    pub trace_dev: Vec<f64>,
    pub hermiticity: Vec<f64>,
    /// Empty unless positivity checking was requested.
    pub min_eigenvalue: Vec<f64>,
    /// Largest anti-Hermitian part removed by re-symmetrization.
    pub symmetrization_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub photon_numbers: Vec<[f64; 3]>,
    pub moments: Vec<MomentState>,
    pub source: Solver,
    pub stats: OdeStats,
    pub fock: Option<FockDiagnostics>,
    /// Lab-frame states, kept only on request.
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    /// Largest absolute difference between two runs on the same grid,
    /// over photon numbers, means and second moments.
    pub fn max_deviation(&self, other: &Trajectory) -> Result<f64> {
        if self.times != other.times {
            return Err(QsimError::InvalidGrid {
                reason: "trajectories sampled on different grids".into(),
            });
        }
        Ok(self
            .moments
            .iter()
            .zip(&other.moments)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub ode: OdeOptions,
    /// Compute the smallest eigenvalue of rho at every sample.
    pub check_positivity: bool,
    pub keep_states: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            ode: OdeOptions::default(),
            check_positivity: false,
            keep_states: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Vacuum,
    /// Thermal at the bath occupations.
    Thermal,
    Fock([usize; 3]),
    /// Thermal with explicitly given occupations.
    Occupations([f64; 3]),
}

impl InitialState {
    pub fn density(&self, space: FockSpace, bath: &BathSpec) -> Result<DensityMatrix> {
        match *self {
            InitialState::Vacuum => Ok(DensityMatrix::vacuum(space)),
            InitialState::Thermal => DensityMatrix::thermal(space, bath.nbar),
            InitialState::Fock(n) => DensityMatrix::fock(space, n),
            InitialState::Occupations(n) => DensityMatrix::thermal(space, n),
        }
    }

    /// Untruncated moments of the same state.
    pub fn moments(&self, bath: &BathSpec, t: f64) -> MomentState {
        match *self {
            InitialState::Vacuum => MomentState::vacuum(t),
            InitialState::Thermal => MomentState::diagonal(bath.nbar, t),
            InitialState::Fock(n) => MomentState::diagonal(n.map(|k| k as f64), t),
            InitialState::Occupations(n) => MomentState::diagonal(n, t),
        }
    }
}

/// Single-ladder row maps for every mode, and the normal-ordered moment
/// extraction built on them.
struct LadderMaps {
    a: [RowMap; 3],
    pairs: Vec<((usize, usize), RowMap, RowMap)>,
}

impl LadderMaps {
    fn new(space: &FockSpace) -> Self {
        let a = std::array::from_fn(|m| RowMap::ladder(space, Ladder::a(m)));
        let mut pairs = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                let nn = RowMap::product(space, &[Ladder::ad(i), Ladder::a(j)]);
                let aa = RowMap::product(space, &[Ladder::a(i), Ladder::a(j)]);
                pairs.push(((i, j), nn, aa));
            }
        }
        LadderMaps { a, pairs }
    }

    /// Lab-frame moments of the state `flat` (column-major, `n x n`) that
    /// lives in the interaction picture at time `t_frame`.
    fn moments(&self, flat: &[Complex64], n: usize, omega: [f64; 3], t_frame: f64, t: f64) -> MomentState {
        let tr = |map: &RowMap| -> Complex64 {
            let mut acc = ZERO;
            for r in 0..n {
                let v = map.val[r];
                if v != 0.0 {
                    acc += flat[map.src[r] + r * n] * v;
                }
            }
            acc
        };
        let phase = |theta: f64| Complex64::from_polar(1.0, theta * t_frame);
        let mut m = MomentState {
            mean: Vec6::zeros(),
            second: Mat6::zeros(),
            t,
        };
        for i in 0..3 {
            let ai = tr(&self.a[i]) * phase(-omega[i]);
            m.mean[i] = ai;
            m.mean[3 + i] = ai.conj();
        }
        for ((i, j), nn, aa) in &self.pairs {
            let (i, j) = (*i, *j);
            let nij = tr(nn) * phase(omega[i] - omega[j]);
            let aij = tr(aa) * phase(-omega[i] - omega[j]);
            m.second[(3 + i, j)] = nij;
            m.second[(i, j)] = aij;
            m.second[(3 + i, 3 + j)] = aij.conj();
        }
        // <a_i a_j†> = <a_j† a_i> + delta_ij
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                m.second[(i, 3 + j)] = m.second[(3 + j, i)] + delta;
            }
        }
        // the truncated trace of a_i a_j and a_j a_i agree exactly only up to rounding
        for i in 0..3 {
            for j in (i + 1)..3 {
                let s = (m.second[(i, j)] + m.second[(j, i)]) * 0.5;
                m.second[(i, j)] = s;
                m.second[(j, i)] = s;
                m.second[(3 + i, 3 + j)] = s.conj();
                m.second[(3 + j, 3 + i)] = s.conj();
            }
        }
        m
    }
}

/// One interaction-picture Hamiltonian term: `coeff e^{i theta t}` (times
/// the drive carrier when `driven`) on a row map, stored compactly.
struct Term {
    coeff: Complex64,
    theta: f64,
    driven: bool,
    rows: Vec<u32>,
    src: Vec<u32>,
    val: Vec<f64>,
}

struct Jump {
    rate: f64,
    rows: Vec<u32>,
    src: Vec<u32>,
    val: Vec<f64>,
}

fn compact(map: &RowMap) -> (Vec<u32>, Vec<u32>, Vec<f64>) {
    let mut rows = Vec::new();
    let mut src = Vec::new();
    let mut val = Vec::new();
    for r in 0..map.src.len() {
        if map.val[r] != 0.0 {
            rows.push(r as u32);
            src.push(map.src[r] as u32);
            val.push(map.val[r]);
        }
    }
    (rows, src, val)
}

/// Interaction-picture Lindblad generator.
struct Liouvillian {
    n: usize,
    terms: Vec<Term>,
    /// Static diagonal of the effective (non-Hermitian) Hamiltonian / hbar.
    diag: Vec<Complex64>,
    jumps: Vec<Jump>,
    drive_freq: f64,
}

impl Liouvillian {
    fn new(lh: &LadderHamiltonian, bath: &BathSpec, space: &FockSpace) -> Self {
        let n = space.total_dim();
        // merge monomials that are the same operator
        let mut merged: BTreeMap<(Vec<Ladder>, bool), Complex64> = BTreeMap::new();
        for mut m in lh.monomials(false) {
            if m.ops.len() == 2 && m.ops[0].mode != m.ops[1].mode {
                m.ops.sort();
            }
            *merged.entry((m.ops, m.driven)).or_insert(ZERO) += m.coeff / HBAR;
        }
        let mut diag = vec![ZERO; n];
        let mut terms = Vec::new();
        for ((ops, driven), c) in merged {
            if c == ZERO {
                continue;
            }
            let theta: f64 = ops.iter().map(|op| op.phase_rate(&lh.omega)).sum();
            let map = RowMap::product(space, &ops);
            let same_mode_number = ops.len() == 2 && ops[0].mode == ops[1].mode && ops[0].dagger != ops[1].dagger;
            if !driven && same_mode_number {
                for r in 0..n {
                    diag[r] += c * map.val[r];
                }
                continue;
            }
            let (rows, src, val) = compact(&map);
            terms.push(Term {
                coeff: c,
                theta,
                driven,
                rows,
                src,
                val,
            });
        }
        let mut jumps = Vec::new();
        for m in 0..3 {
            let (down, up) = bath.rates(m);
            let num = RowMap::product(space, &[Ladder::ad(m), Ladder::a(m)]);
            let anti = RowMap::product(space, &[Ladder::a(m), Ladder::ad(m)]);
            for r in 0..n {
                diag[r] += Complex64::new(0.0, -0.5) * (down * num.val[r] + up * anti.val[r]);
            }
            for (rate, op) in [(down, Ladder::a(m)), (up, Ladder::ad(m))] {
                if rate > 0.0 {
                    let (rows, src, val) = compact(&RowMap::ladder(space, op));
                    jumps.push(Jump { rate, rows, src, val });
                }
            }
        }
        Liouvillian {
            n,
            terms,
            diag,
            jumps,
            drive_freq: lh.drive_freq,
        }
    }

    fn apply(&self, t: f64, rho: &[Complex64], x: &mut [Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let carrier = (2.0 * PI * self.drive_freq * t).cos();
        let coeffs: Vec<Complex64> = self
            .terms
            .iter()
            .map(|term| {
                let c = term.coeff * Complex64::from_polar(1.0, term.theta * t);
                if term.driven {
                    c * carrier
                } else {
                    c
                }
            })
            .collect();
        // X = Heff rho, column by column
        x.par_chunks_mut(n).enumerate().for_each(|(c, xcol)| {
            let col = &rho[c * n..(c + 1) * n];
            for r in 0..n {
                xcol[r] = self.diag[r] * col[r];
            }
            for (term, &k) in self.terms.iter().zip(&coeffs) {
                for idx in 0..term.rows.len() {
                    let r = term.rows[idx] as usize;
                    let s = term.src[idx] as usize;
                    xcol[r] += k * (col[s] * term.val[idx]);
                }
            }
        });
        // -i (X - X†)
        out.par_chunks_mut(n).enumerate().for_each(|(c, ocol)| {
            for r in 0..n {
                let d = x[r + c * n] - x[c + r * n].conj();
                ocol[r] = Complex64::new(d.im, -d.re);
            }
        });
        for jump in &self.jumps {
            let len = jump.rows.len();
            for ic in 0..len {
                let c = jump.rows[ic] as usize;
                let sc = jump.src[ic] as usize;
                let wc = jump.rate * jump.val[ic];
                let ocol = &mut out[c * n..(c + 1) * n];
                let rcol = &rho[sc * n..(sc + 1) * n];
                for ir in 0..len {
                    let r = jump.rows[ir] as usize;
                    let sr = jump.src[ir] as usize;
                    ocol[r] += rcol[sr] * (wc * jump.val[ir]);
                }
            }
        }
    }
}

fn symmetrize_flat(y: &mut [Complex64], n: usize) -> f64 {
    let mut drift = 0.0_f64;
    for c in 0..n {
        for r in 0..c {
            let a = y[r + c * n];
            let b = y[c + r * n];
            drift = drift.max((a - b.conj()).norm());
            let s = (a + b.conj()) * 0.5;
            y[r + c * n] = s;
            y[c + r * n] = s.conj();
        }
        let d = &mut y[c + c * n];
        drift = drift.max(d.im.abs());
        d.im = 0.0;
    }
    drift
}

fn hermiticity_flat(y: &[Complex64], n: usize) -> f64 {
    let mut worst = 0.0_f64;
    for c in 0..n {
        for r in 0..=c {
            worst = worst.max((y[r + c * n] - y[c + r * n].conj()).norm());
        }
    }
    worst
}

/// Rotate between frames: `rho_lab[m, k] = rho_I[m, k] e^{-i (E_m - E_k) t / hbar}`
/// (`sign = -1`), or back (`sign = +1`).
fn frame_rotate(flat: &mut [Complex64], space: &FockSpace, omega: [f64; 3], t: f64, sign: f64) {
    let n = space.total_dim();
    if t == 0.0 {
        return;
    }
    let energy: Vec<f64> = (0..n)
        .map(|k| {
            let occ = space.occupations(k);
            (0..3).map(|m| omega[m] * occ[m] as f64).sum()
        })
        .collect();
    for c in 0..n {
        for r in 0..n {
            flat[r + c * n] *= Complex64::from_polar(1.0, sign * (energy[r] - energy[c]) * t);
        }
    }
}

/// Evolve `rho0` (given in the lab frame at `t_grid[0]`) through `t_grid`.
pub fn evolve_fock(
    lh: &LadderHamiltonian,
    bath: &BathSpec,
    space: &FockSpace,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if rho0.space() != *space {
        return Err(QsimError::SpaceMismatch {
            left: space.dims().to_vec(),
            right: rho0.space().dims().to_vec(),
        });
    }
    DensityMatrix::new(*space, rho0.matrix().clone())?;
    crate::ode::validate_grid(t_grid)?;
    let n = space.total_dim();
    let liou = Liouvillian::new(lh, bath, space);
    let maps = LadderMaps::new(space);
    let omega = lh.omega;

    let mut y: Vec<Complex64> = rho0.matrix().as_slice().to_vec();
    frame_rotate(&mut y, space, omega, t_grid[0], 1.0);

    let mut scratch = vec![ZERO; n * n];
    let mut diag = FockDiagnostics::default();
    let mut drift = 0.0_f64;
    let mut moments = Vec::with_capacity(t_grid.len());
    let mut photons = Vec::with_capacity(t_grid.len());
    let mut states = Vec::new();

    let stats = integrate(
        |t, rho, out| liou.apply(t, rho, &mut scratch, out),
        &mut y,
        t_grid,
        &opts.ode,
        |_, y| {
            drift = drift.max(symmetrize_flat(y, n));
            // the removed part is at rounding level, so the FSAL stage stays valid
            false
        },
        |_, t, y| {
            let trace: Complex64 = (0..n).map(|k| y[k + k * n]).sum();
            diag.trace_dev.push((trace - 1.0).norm());
            diag.hermiticity.push(hermiticity_flat(y, n));
            if opts.check_positivity || opts.keep_states {
                let mut lab = y.to_vec();
                frame_rotate(&mut lab, space, omega, t, -1.0);
                let dm = DensityMatrix::new_unchecked(*space, DMatrix::from_column_slice(n, n, &lab))?;
                if opts.check_positivity {
                    diag.min_eigenvalue.push(dm.min_eigenvalue());
                }
                if opts.keep_states {
                    states.push(dm);
                }
            }
            let m = maps.moments(y, n, omega, t, t);
            photons.push(m.photon_numbers());
            moments.push(m);
            Ok(())
        },
    )?;
    diag.symmetrization_drift = drift;
    Ok(Trajectory {
        times: t_grid.to_vec(),
        photon_numbers: photons,
        moments,
        source: Solver::Fock,
        stats,
        fock: Some(diag),
        states,
    })
}

/// Linear moment dynamics `dv/dt = M v + d(t)` with diffusion `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentGenerator {
    pub drift: Mat6,
    /// Drive vector amplitude; `d(t) = drive * cos(2 pi f_drive t)`.
    pub drive: Vec6,
    pub drive_freq: f64,
    pub diffusion: Mat6,
}

/// Quadratic-form matrix `h` with `H = sum_kl h_kl v_k v_l`, plus the
/// linear coefficients `e` with `H ⊃ cos(2 pi f t) sum_k e_k v_k`.
pub fn quadratic_form(lh: &LadderHamiltonian) -> (Mat6, Vec6) {
    let mut h = Mat6::zeros();
    for i in 0..3 {
        h[(3 + i, i)] += Complex64::new(HBAR * lh.omega[i], 0.0);
    }
    for (key, &c) in &lh.pairs {
        let PairKey { i, j, left, right } = *key;
        let mut u = Vec6::zeros();
        let mut w = Vec6::zeros();
        u[i] = Complex64::new(1.0, 0.0);
        u[3 + i] = Complex64::new(left.dagger_sign(), 0.0);
        w[j] = Complex64::new(1.0, 0.0);
        w[3 + j] = Complex64::new(right.dagger_sign(), 0.0);
        h += u * w.transpose() * c;
    }
    let mut e = Vec6::zeros();
    for (&(m, quad), &d) in &lh.drive {
        match quad {
            crate::quantization::Quadrature::Charge => {
                e[m] += -I * d;
                e[3 + m] += I * d;
            }
            crate::quantization::Quadrature::Flux => {
                e[m] += Complex64::new(d, 0.0);
                e[3 + m] += Complex64::new(d, 0.0);
            }
        }
    }
    (h, e)
}

pub fn moment_generator(lh: &LadderHamiltonian, bath: &BathSpec) -> MomentGenerator {
    let (h, e) = quadratic_form(lh);
    let j = symplectic_j();
    let scale = -I / HBAR;
    let mut drift = j * (h + h.transpose()) * scale;
    let mut diffusion = Mat6::zeros();
    for m in 0..3 {
        let half = Complex64::new(0.5 * bath.kappa[m], 0.0);
        drift[(m, m)] -= half;
        drift[(3 + m, 3 + m)] -= half;
        let (down, up) = bath.rates(m);
        diffusion[(m, 3 + m)] = Complex64::new(down, 0.0);
        diffusion[(3 + m, m)] = Complex64::new(up, 0.0);
    }
    MomentGenerator {
        drift,
        drive: j * e * scale,
        drive_freq: lh.drive_freq,
        diffusion,
    }
}

impl MomentGenerator {
    fn rhs(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let mean = Vec6::from_column_slice(&y[..6]);
        let second = Mat6::from_column_slice(&y[6..42]);
        let d = self.drive * Complex64::new((2.0 * PI * self.drive_freq * t).cos(), 0.0);
        let dm = self.drift * mean + d;
        let ds = self.drift * second
            + second * self.drift.transpose()
            + d * mean.transpose()
            + mean * d.transpose()
            + self.diffusion;
        dy[..6].copy_from_slice(dm.as_slice());
        dy[6..42].copy_from_slice(ds.as_slice());
    }
}

/// Evolve first and second moments exactly (Gaussian closure is exact for
/// a quadratic Hamiltonian with linear damping).
pub fn evolve_moments(
    lh: &LadderHamiltonian,
    bath: &BathSpec,
    m0: &MomentState,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    crate::ode::validate_grid(t_grid)?;
    let gen = moment_generator(lh, bath);
    let mut y = Vec::with_capacity(42);
    y.extend_from_slice(m0.mean.as_slice());
    y.extend_from_slice(m0.second.as_slice());
    let mut moments = Vec::with_capacity(t_grid.len());
    let mut photons = Vec::with_capacity(t_grid.len());
    let stats = integrate(
        |t, y, dy| gen.rhs(t, y, dy),
        &mut y,
        t_grid,
        &opts.ode,
        |_, _| false,
        |_, t, y| {
            let m = MomentState {
                mean: Vec6::from_column_slice(&y[..6]),
                second: Mat6::from_column_slice(&y[6..42]),
                t,
            };
            photons.push(m.photon_numbers());
            moments.push(m);
            Ok(())
        },
    )?;
    Ok(Trajectory {
        times: t_grid.to_vec(),
        photon_numbers: photons,
        moments,
        source: Solver::MomentFlow,
        stats,
        fock: None,
        states: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    pub dims: [usize; 3],
    pub grown_dims: [usize; 3],
    pub max_deviation: f64,
    pub tolerance: f64,
    pub converged: bool,
}

/// Run the Fock path at `space` and again with every mode raised by two
/// levels; the run is converged when all moments agree within `tol`.
pub fn evolve_fock_checked(
    lh: &LadderHamiltonian,
    bath: &BathSpec,
    space: &FockSpace,
    init: InitialState,
    t_grid: &[f64],
    opts: &EvolveOptions,
    tol: f64,
) -> Result<(Trajectory, TruncationReport)> {
    let base = evolve_fock(lh, bath, space, &init.density(*space, bath)?, t_grid, opts)?;
    let big = space.grown(2);
    let light = EvolveOptions {
        check_positivity: false,
        keep_states: false,
        ..*opts
    };
    let reference = evolve_fock(lh, bath, &big, &init.density(big, bath)?, t_grid, &light)?;
    let dev = base.max_deviation(&reference)?;
    let report = TruncationReport {
        dims: space.dims(),
        grown_dims: big.dims(),
        max_deviation: dev,
        tolerance: tol,
        converged: dev <= tol,
    };
    Ok((base, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantization::Quadrature;

    fn single_mode_bath(kappa: f64, nbar: f64) -> BathSpec {
        BathSpec::with_occupations(0.0, [nbar, 0.0, 0.0], [kappa, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn occupation_limits() {
        assert_eq!(bath_occupation(1e10, 0.0), 0.0);
        let n = bath_occupation(2.0 * PI * 5e9, 4.2);
        assert!((n - 17.01).abs() < 0.02, "{n}");
        let t = 1.0;
        let w = K_B * t * 2f64.ln() / HBAR;
        assert!((bath_occupation(w, t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_fock_state_is_stationary() {
        let sp = FockSpace::new([4, 3, 2]).unwrap();
        let lh = LadderHamiltonian::harmonic([3e10, 2e10, 4e10]);
        let bath = BathSpec::with_occupations(0.0, [0.0; 3], [0.0; 3]).unwrap();
        let rho = DensityMatrix::fock(sp, [2, 1, 0]).unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 1e-9).collect();
        let tr = evolve_fock(&lh, &bath, &sp, &rho, &grid, &EvolveOptions::default()).unwrap();
        for n in &tr.photon_numbers {
            assert!((n[0] - 2.0).abs() < 1e-8 && (n[1] - 1.0).abs() < 1e-8 && n[2].abs() < 1e-8);
        }
    }

    #[test]
    fn amplitude_damping_of_one_photon() {
        let sp = FockSpace::new([4, 2, 2]).unwrap();
        let lh = LadderHamiltonian::harmonic([2.0 * PI * 5e9; 3]);
        let bath = single_mode_bath(1e9, 0.0);
        let rho = DensityMatrix::fock(sp, [1, 0, 0]).unwrap();
        let tr = evolve_fock(&lh, &bath, &sp, &rho, &[0.0, 1e-9], &EvolveOptions::default()).unwrap();
        let n = tr.photon_numbers[1][0];
        assert!((n - (-1f64).exp()).abs() < 1e-4, "{n}");
    }

    #[test]
    fn moment_flow_thermalizes() {
        let lh = LadderHamiltonian::harmonic([2.0 * PI * 5e9, 2.0 * PI * 6e9, 2.0 * PI * 7e9]);
        let bath = BathSpec::with_occupations(0.0, [0.5, 0.2, 0.0], [1e9, 2e9, 3e9]).unwrap();
        let tr = evolve_moments(&lh, &bath, &MomentState::vacuum(0.0), &[0.0, 20e-9], &EvolveOptions::default())
            .unwrap();
        let n = tr.photon_numbers[1];
        assert!((n[0] - 0.5).abs() < 1e-6 && (n[1] - 0.2).abs() < 1e-6 && n[2].abs() < 1e-9, "{n:?}");
        let last = tr.moments.last().unwrap();
        assert!(last.commutator_error() < 1e-9);
        assert!(last.mean.iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn moment_extraction_from_density() {
        let sp = FockSpace::new([3, 3, 3]).unwrap();
        let rho = DensityMatrix::fock(sp, [2, 0, 1]).unwrap();
        let m = MomentState::from_density(&rho, 0.0);
        assert!((m.photon_numbers()[0] - 2.0).abs() < 1e-14);
        assert!((m.second[(2, 5)].re - 2.0).abs() < 1e-14);
        assert!(m.conjugation_error() < 1e-15);
        assert!(m.commutator_error() < 1e-15);
    }

    #[test]
    fn generator_single_mode_structure() {
        let w = 3.0;
        let mut lh = LadderHamiltonian::harmonic([w, 0.0, 0.0]);
        lh.drive.insert((0, Quadrature::Flux), HBAR);
        let bath = single_mode_bath(0.4, 0.0);
        let g = moment_generator(&lh, &bath);
        assert!((g.drift[(0, 0)] - Complex64::new(-0.2, -w)).norm() < 1e-12);
        assert!((g.drift[(3, 3)] - Complex64::new(-0.2, w)).norm() < 1e-12);
        // flux drive: da/dt = -i d, da†/dt = +i d
        assert!((g.drive[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((g.drive[3] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }
}
