//! Truncated three-mode Fock space.
//!
//! Basis ordering is `mode0 ⊗ mode1 ⊗ mode2`: the flat index of
//! `|n0, n1, n2>` is `(n0 * N1 + n1) * N2 + n2`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QsimError, Result};
use crate::quantization::{Ladder, LadderHamiltonian, Monomial};
use crate::sparse::CscMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockSpace {
    dims: [usize; 3],
}

impl FockSpace {
    pub fn new(dims: [usize; 3]) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(QsimError::InvalidDims { dims: dims.to_vec() });
        }
        Ok(FockSpace { dims })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// The same space with every mode raised by `k` levels.
    pub fn grown(&self, k: usize) -> Self {
        FockSpace {
            dims: self.dims.map(|n| n + k),
        }
    }

    pub fn index(&self, n: [usize; 3]) -> usize {
        (n[0] * self.dims[1] + n[1]) * self.dims[2] + n[2]
    }

    pub fn occupations(&self, idx: usize) -> [usize; 3] {
        let n2 = idx % self.dims[2];
        let rest = idx / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], n2]
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= 3 {
            Err(QsimError::ModeOutOfRange { mode, modes: 3 })
        } else {
            Ok(())
        }
    }
}

/// A matrix with at most one nonzero per row: row `r` holds `val[r]` in
/// column `src[r]`. Every product of ladder operators has this shape.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RowMap {
    pub src: Vec<usize>,
    pub val: Vec<f64>,
}

impl RowMap {
    pub fn identity(n: usize) -> Self {
        RowMap {
            src: (0..n).collect(),
            val: vec![1.0; n],
        }
    }

    pub fn ladder(space: &FockSpace, op: Ladder) -> Self {
        let n = space.total_dim();
        let stride = space.dims[op.mode + 1..].iter().product::<usize>();
        let top = space.dims[op.mode];
        let mut src = Vec::with_capacity(n);
        let mut val = Vec::with_capacity(n);
        for r in 0..n {
            let k = space.occupations(r)[op.mode];
            // a: row k takes column k+1 with sqrt(k+1); a†: row k takes column k-1 with sqrt(k)
            let (s, v) = if op.dagger {
                if k == 0 {
                    (r, 0.0)
                } else {
                    (r - stride, (k as f64).sqrt())
                }
            } else if k + 1 < top {
                (r + stride, ((k + 1) as f64).sqrt())
            } else {
                (r, 0.0)
            };
            src.push(s);
            val.push(v);
        }
        RowMap { src, val }
    }

    /// Matrix product `self * other`.
    pub fn then(&self, other: &RowMap) -> RowMap {
        let src = self.src.iter().map(|&s| other.src[s]).collect();
        let val = self
            .src
            .iter()
            .zip(&self.val)
            .map(|(&s, &v)| if v == 0.0 { 0.0 } else { v * other.val[s] })
            .collect();
        RowMap { src, val }
    }

    pub fn product(space: &FockSpace, ops: &[Ladder]) -> RowMap {
        ops.iter().fold(RowMap::identity(space.total_dim()), |acc, &op| {
            acc.then(&RowMap::ladder(space, op))
        })
    }

    pub fn to_csc(&self, scale: Complex64) -> CscMatrix {
        let n = self.src.len();
        let trip: Vec<_> = (0..n)
            .filter(|&r| self.val[r] != 0.0)
            .map(|r| (r, self.src[r], scale * self.val[r]))
            .collect();
        CscMatrix::from_triplets(n, n, &trip)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    space: FockSpace,
    matrix: CscMatrix,
}

impl FockOperator {
    pub fn new(space: FockSpace, matrix: CscMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(QsimError::SpaceMismatch {
                left: space.dims.to_vec(),
                right: vec![matrix.nrows(), matrix.ncols()],
            });
        }
        Ok(FockOperator { space, matrix })
    }

    pub fn identity(space: FockSpace) -> Self {
        FockOperator {
            space,
            matrix: CscMatrix::identity(space.total_dim()),
        }
    }

    pub fn zero(space: FockSpace) -> Self {
        let n = space.total_dim();
        FockOperator {
            space,
            matrix: CscMatrix::zeros(n, n),
        }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        self.matrix.to_dense()
    }

    pub fn adjoint(&self) -> Self {
        FockOperator {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(QsimError::SpaceMismatch {
                left: self.space.dims.to_vec(),
                right: other.space.dims.to_vec(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(FockOperator {
            space: self.space,
            matrix: self.matrix.mul(&other.matrix),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(FockOperator {
            space: self.space,
            matrix: self.matrix.add(&other.matrix),
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        FockOperator {
            space: self.space,
            matrix: self.matrix.scale(s),
        }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        Ok(FockOperator {
            space: self.space,
            matrix: ab.matrix.sub(&ba.matrix),
        })
    }

    pub fn norm_max(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// Max-abs deviation from the adjoint.
    pub fn hermiticity_error(&self) -> f64 {
        self.matrix.max_abs_diff(&self.matrix.adjoint())
    }
}

fn ladder_operator(space: &FockSpace, op: Ladder) -> Result<FockOperator> {
    space.check_mode(op.mode)?;
    Ok(FockOperator {
        space: *space,
        matrix: RowMap::ladder(space, op).to_csc(Complex64::new(1.0, 0.0)),
    })
}

/// Lowering operator of `mode`, embedded with identities on the other modes.
pub fn annihilation(space: &FockSpace, mode: usize) -> Result<FockOperator> {
    ladder_operator(space, Ladder::a(mode))
}

pub fn creation(space: &FockSpace, mode: usize) -> Result<FockOperator> {
    ladder_operator(space, Ladder::ad(mode))
}

pub fn number(space: &FockSpace, mode: usize) -> Result<FockOperator> {
    space.check_mode(mode)?;
    Ok(FockOperator {
        space: *space,
        matrix: RowMap::product(space, &[Ladder::ad(mode), Ladder::a(mode)])
            .to_csc(Complex64::new(1.0, 0.0)),
    })
}

fn monomial_operator(space: &FockSpace, m: &Monomial, scale: Complex64) -> CscMatrix {
    RowMap::product(space, &m.ops).to_csc(m.coeff * scale)
}

/// `H(t)` on `space`, with the drive scaled by `cos(2 pi f_drive t)`.
pub fn assemble_hamiltonian(lh: &LadderHamiltonian, space: &FockSpace, t: f64) -> FockOperator {
    let factor = (2.0 * PI * lh.drive_freq * t).cos();
    assemble_with_drive_factor(lh, space, factor)
}

/// Static part plus `factor` times the drive operator.
pub fn assemble_with_drive_factor(lh: &LadderHamiltonian, space: &FockSpace, factor: f64) -> FockOperator {
    let n = space.total_dim();
    let mut trip = Vec::new();
    for m in lh.monomials(true) {
        if m.driven && factor == 0.0 {
            continue;
        }
        let s = if m.driven { factor } else { 1.0 };
        trip.extend(monomial_operator(space, &m, Complex64::new(s, 0.0)).iter());
    }
    FockOperator {
        space: *space,
        matrix: CscMatrix::from_triplets(n, n, &trip),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: FockSpace,
    rho: DMatrix<Complex64>,
}

/// Invariant tolerances for a valid density matrix.
pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

impl DensityMatrix {
    /// Validate and wrap `rho`.
    pub fn new(space: FockSpace, rho: DMatrix<Complex64>) -> Result<Self> {
        let dm = Self::new_unchecked(space, rho)?;
        let tr = (dm.trace() - 1.0).abs();
        if tr > TRACE_TOL {
            return Err(QsimError::InvalidState {
                reason: format!("trace deviates from 1 by {tr:e}"),
            });
        }
        let h = dm.hermiticity_error();
        if h > HERMITIAN_TOL {
            return Err(QsimError::InvalidState {
                reason: format!("not Hermitian (max deviation {h:e})"),
            });
        }
        let e = dm.min_eigenvalue();
        if e < -POSITIVITY_TOL {
            return Err(QsimError::InvalidState {
                reason: format!("negative eigenvalue {e:e}"),
            });
        }
        Ok(dm)
    }

    /// Wrap `rho` after a shape check only (used for intermediate states).
    pub fn new_unchecked(space: FockSpace, rho: DMatrix<Complex64>) -> Result<Self> {
        let n = space.total_dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(QsimError::SpaceMismatch {
                left: space.dims.to_vec(),
                right: vec![rho.nrows(), rho.ncols()],
            });
        }
        Ok(DensityMatrix { space, rho })
    }

    pub fn fock(space: FockSpace, n: [usize; 3]) -> Result<Self> {
        for m in 0..3 {
            if n[m] >= space.dims[m] {
                return Err(QsimError::InvalidState {
                    reason: format!("occupation {} of mode {} exceeds truncation {}", n[m], m + 1, space.dims[m]),
                });
            }
        }
        let dim = space.total_dim();
        let mut rho = DMatrix::from_element(dim, dim, ZERO);
        let k = space.index(n);
        rho[(k, k)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { space, rho })
    }

    pub fn vacuum(space: FockSpace) -> Self {
        Self::fock(space, [0, 0, 0]).expect("vacuum always fits")
    }

    /// Product of per-mode thermal states, truncated and renormalized.
    pub fn thermal(space: FockSpace, nbar: [f64; 3]) -> Result<Self> {
        let mut probs: Vec<Vec<f64>> = Vec::with_capacity(3);
        for m in 0..3 {
            if !(nbar[m] >= 0.0) || !nbar[m].is_finite() {
                return Err(QsimError::InvalidState {
                    reason: format!("thermal occupation of mode {} must be finite and >= 0", m + 1),
                });
            }
            let q = nbar[m] / (nbar[m] + 1.0);
            let mut p: Vec<f64> = (0..space.dims[m]).map(|k| q.powi(k as i32)).collect();
            let z: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= z);
            probs.push(p);
        }
        let dim = space.total_dim();
        let mut rho = DMatrix::from_element(dim, dim, ZERO);
        for k in 0..dim {
            let n = space.occupations(k);
            rho[(k, k)] = Complex64::new(probs[0][n[0]] * probs[1][n[1]] * probs[2][n[2]], 0.0);
        }
        Ok(DensityMatrix { space, rho })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.rho.nrows();
        let mut worst = 0.0_f64;
        for c in 0..n {
            for r in 0..=c {
                worst = worst.max((self.rho[(r, c)] - self.rho[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }
}

/// `Tr(rho op)`. For Hermitian `op` the imaginary part is numerical noise.
pub fn expectation(rho: &DensityMatrix, op: &FockOperator) -> Result<Complex64> {
    if rho.space != op.space {
        return Err(QsimError::SpaceMismatch {
            left: rho.space.dims.to_vec(),
            right: op.space.dims.to_vec(),
        });
    }
    Ok(op.matrix.iter().map(|(r, c, v)| v * rho.rho[(c, r)]).sum())
}

/// Real expectation of a Hermitian operator; errors when the imaginary
/// part exceeds `1e-9` (relative to the magnitude, floor 1).
pub fn expectation_real(rho: &DensityMatrix, op: &FockOperator) -> Result<f64> {
    let e = expectation(rho, op)?;
    if e.im.abs() > 1e-9 * e.re.abs().max(1.0) {
        return Err(QsimError::InvalidState {
            reason: format!("expectation of a Hermitian operator has imaginary part {:e}", e.im),
        });
    }
    Ok(e.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantization::{PairKey, Quadrature};
    use crate::units::HBAR;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_mode_lowering_matrix() {
        let sp = FockSpace::new([3, 2, 2]).unwrap();
        let a = annihilation(&sp, 0).unwrap().to_dense();
        // restrict to modes 1,2 in their ground state
        let idx = |k: usize| sp.index([k, 0, 0]);
        let expect = [[0.0, 1.0, 0.0], [0.0, 0.0, 2f64.sqrt()], [0.0, 0.0, 0.0]];
        for r in 0..3 {
            for cc in 0..3 {
                assert_eq!(a[(idx(r), idx(cc))], c(expect[r][cc]));
            }
        }
    }

    #[test]
    fn vacuum_is_annihilated() {
        let sp = FockSpace::new([3, 4, 2]).unwrap();
        let vac = sp.index([0, 0, 0]);
        for m in 0..3 {
            let a = annihilation(&sp, m).unwrap().to_dense();
            assert!(a.column(vac).iter().all(|v| *v == ZERO));
        }
    }

    #[test]
    fn truncated_commutator_top_level() {
        let sp = FockSpace::new([5, 2, 2]).unwrap();
        let a = annihilation(&sp, 0).unwrap();
        let comm = a.commutator(&a.adjoint()).unwrap().to_dense();
        for k in 0..sp.total_dim() {
            let n = sp.occupations(k)[0];
            let want = if n == 4 { -4.0 } else { 1.0 };
            assert!((comm[(k, k)] - c(want)).norm() < 1e-14);
        }
        assert_eq!(comm.iter().filter(|v| **v != ZERO).count(), sp.total_dim());
    }

    #[test]
    fn distinct_modes_commute_exactly() {
        let sp = FockSpace::new([3, 4, 3]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let ai = annihilation(&sp, i).unwrap();
                let aj = creation(&sp, j).unwrap();
                assert_eq!(ai.mul(&aj).unwrap(), aj.mul(&ai).unwrap());
            }
        }
    }

    #[test]
    fn mode_out_of_range() {
        let sp = FockSpace::new([2, 2, 2]).unwrap();
        assert!(matches!(annihilation(&sp, 3), Err(QsimError::ModeOutOfRange { .. })));
        assert!(FockSpace::new([2, 1, 2]).is_err());
    }

    #[test]
    fn empty_ledger_is_number_operator() {
        let sp = FockSpace::new([2, 2, 2]).unwrap();
        let lh = LadderHamiltonian::harmonic([1.0; 3]);
        let h = assemble_hamiltonian(&lh, &sp, 0.3).to_dense();
        for k in 0..8 {
            let n: usize = sp.occupations(k).iter().sum();
            assert_eq!(h[(k, k)], c(HBAR * n as f64));
        }
        assert_eq!(h.iter().filter(|v| **v != ZERO).count(), 7);
    }

    #[test]
    fn zero_drive_factor_drops_drive_exactly() {
        let sp = FockSpace::new([3, 3, 2]).unwrap();
        let mut lh = LadderHamiltonian::harmonic([2.0, 3.0, 4.0]);
        lh.add_pair(PairKey::new(0, 1, Quadrature::Charge, Quadrature::Charge), c(0.3));
        lh.drive.insert((0, Quadrature::Charge), 0.7);
        lh.drive.insert((1, Quadrature::Flux), 0.2);
        lh.drive_freq = 1.0;
        let off = assemble_with_drive_factor(&lh, &sp, 0.0);
        let bare = assemble_hamiltonian(&lh.without_drive(), &sp, 0.0);
        assert_eq!(off, bare);
        let quarter = assemble_hamiltonian(&lh, &sp, 0.25);
        assert!(quarter.matrix().max_abs_diff(bare.matrix()) < 1e-15);
        let on = assemble_hamiltonian(&lh, &sp, 0.0);
        assert!(on.hermiticity_error() < 1e-15);
        assert!(on.matrix().max_abs_diff(bare.matrix()) > 0.1);
    }

    #[test]
    fn fock_and_vacuum_expectations() {
        let sp = FockSpace::new([3, 2, 2]).unwrap();
        let n0 = number(&sp, 0).unwrap();
        let vac = DensityMatrix::vacuum(sp);
        assert_eq!(expectation_real(&vac, &n0).unwrap(), 0.0);
        let two = DensityMatrix::fock(sp, [2, 0, 0]).unwrap();
        assert!((expectation_real(&two, &n0).unwrap() - 2.0).abs() < 1e-14);
        assert!(DensityMatrix::fock(sp, [3, 0, 0]).is_err());
    }

    #[test]
    fn thermal_state_is_valid() {
        let sp = FockSpace::new([6, 3, 2]).unwrap();
        let th = DensityMatrix::thermal(sp, [0.5, 0.1, 0.0]).unwrap();
        let checked = DensityMatrix::new(sp, th.matrix().clone()).unwrap();
        assert!((checked.trace() - 1.0).abs() < 1e-14);
        assert!(checked.min_eigenvalue() >= 0.0);
        assert!(checked.purity() < 1.0);
    }

    #[test]
    fn invalid_states_rejected() {
        let sp = FockSpace::new([2, 2, 2]).unwrap();
        let mut m = DensityMatrix::vacuum(sp).into_matrix();
        m[(0, 0)] = c(2.0);
        assert!(DensityMatrix::new(sp, m.clone()).is_err());
        m[(0, 0)] = c(1.5);
        m[(1, 1)] = c(-0.5);
        assert!(DensityMatrix::new(sp, m).is_err());
        let wrong = FockSpace::new([2, 2, 3]).unwrap();
        let vac = DensityMatrix::vacuum(sp);
        let n = number(&wrong, 0).unwrap();
        assert!(expectation(&vac, &n).is_err());
    }
}
