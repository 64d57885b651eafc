//! Two-mode Gaussian correlation measures from second moments.
//!
//! Quadratures are `x = a + a†`, `p = -i (a - a†)`, and the covariance matrix
//! is `sigma_kl = <{dR_k, dR_l}> / 2`, so the vacuum has `sigma = I`. Writing
//! `sigma = [[A, C], [C^T, B]]`, every measure below depends only on the
//! local invariants `detA, detB, detC, det sigma`. Entropies are in bits.
//!
//! Near pure states the closed forms subtract nearly equal numbers under a
//! square root, so invariants, symplectic eigenvalues and the conditional
//! determinant are evaluated in double-double arithmetic and entropies from
//! the offset `x - 1`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::error::{QsimError, Result};
use crate::evolve::MomentState;

/// Arguments of `f` in `[1 - CLAMP, 1]` are treated as exactly 1.
pub const CLAMP: f64 = 1e-9;
/// Tolerance of the bona fide check `sigma + i Omega >= 0`.
pub const BONA_FIDE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub sigma: Matrix4<f64>,
    pub mode_pair: (usize, usize),
}

impl CovarianceMatrix {
    pub fn new(sigma: Matrix4<f64>, mode_pair: (usize, usize)) -> Result<Self> {
        let asym = (sigma - sigma.transpose()).amax();
        if asym > 1e-10 * sigma.amax().max(1.0) {
            return Err(QsimError::Conditioning {
                context: "covariance matrix symmetry".into(),
                value: asym,
            });
        }
        Ok(CovarianceMatrix {
            sigma: (sigma + sigma.transpose()) * 0.5,
            mode_pair,
        })
    }

    pub fn vacuum() -> Self {
        CovarianceMatrix {
            sigma: Matrix4::identity(),
            mode_pair: (0, 1),
        }
    }

    /// Two-mode squeezed vacuum with squeezing `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        CovarianceMatrix {
            sigma: Matrix4::new(
                c, 0.0, s, 0.0, //
                0.0, c, 0.0, -s, //
                s, 0.0, c, 0.0, //
                0.0, -s, 0.0, c,
            ),
            mode_pair: (0, 1),
        }
    }

    pub fn block_a(&self) -> Matrix2<f64> {
        self.sigma.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn block_b(&self) -> Matrix2<f64> {
        self.sigma.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn block_c(&self) -> Matrix2<f64> {
        self.sigma.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn invariants(&self) -> Invariants {
        DdInvariants::of(&self.sigma).to_f64()
    }

    /// Covariance with the two modes exchanged.
    pub fn swapped(&self) -> Self {
        let p = Matrix4::new(
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        );
        CovarianceMatrix {
            sigma: p * self.sigma * p,
            mode_pair: (self.mode_pair.1, self.mode_pair.0),
        }
    }

    /// Smallest eigenvalue of the Hermitian matrix `sigma + i Omega`.
    pub fn bona_fide_margin(&self) -> f64 {
        let omega = symplectic_form();
        let m = self.sigma.map(|x| Complex64::new(x, 0.0)) + omega.map(|x| Complex64::new(0.0, x));
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_bona_fide(&self) -> bool {
        self.bona_fide_margin() > -BONA_FIDE_TOL
    }
}

/// `Omega = diag(J, J)` with `J = [[0, 1], [-1, 0]]`.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut o = Matrix4::zeros();
    o[(0, 1)] = 1.0;
    o[(1, 0)] = -1.0;
    o[(2, 3)] = 1.0;
    o[(3, 2)] = -1.0;
    o
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub det_a: f64,
    pub det_b: f64,
    pub det_c: f64,
    pub det_sigma: f64,
}

impl Invariants {
    fn to_dd(self) -> DdInvariants {
        DdInvariants {
            a: TwoFloat::from(self.det_a),
            b: TwoFloat::from(self.det_b),
            c: TwoFloat::from(self.det_c),
            d: TwoFloat::from(self.det_sigma),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct DdInvariants {
    a: TwoFloat,
    b: TwoFloat,
    c: TwoFloat,
    d: TwoFloat,
}

fn det2(m: &Matrix4<f64>, r: (usize, usize), c: (usize, usize)) -> TwoFloat {
    TwoFloat::new_mul(m[(r.0, c.0)], m[(r.1, c.1)]) - TwoFloat::new_mul(m[(r.0, c.1)], m[(r.1, c.0)])
}

impl DdInvariants {
    fn of(s: &Matrix4<f64>) -> Self {
        // Laplace expansion of the 4x4 determinant over the top two rows
        let cols = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let complement = [(2, 3), (1, 3), (1, 2), (0, 3), (0, 2), (0, 1)];
        let signs = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0];
        let mut d = TwoFloat::from(0.0);
        for k in 0..6 {
            d += det2(s, (0, 1), cols[k]) * det2(s, (2, 3), complement[k]) * signs[k];
        }
        DdInvariants {
            a: det2(s, (0, 1), (0, 1)),
            b: det2(s, (2, 3), (2, 3)),
            c: det2(s, (0, 1), (2, 3)),
            d,
        }
    }

    fn swapped(self) -> Self {
        DdInvariants {
            a: self.b,
            b: self.a,
            ..self
        }
    }

    fn to_f64(self) -> Invariants {
        Invariants {
            det_a: self.a.hi() + self.a.lo(),
            det_b: self.b.hi() + self.b.lo(),
            det_c: self.c.hi() + self.c.lo(),
            det_sigma: self.d.hi() + self.d.lo(),
        }
    }
}

fn f64_of(x: TwoFloat) -> f64 {
    x.hi() + x.lo()
}

/// `(nu_minus, nu_plus, nu_tilde_minus)`.
pub fn symplectic_eigenvalues(cm: &CovarianceMatrix) -> Result<(f64, f64, f64)> {
    let s = Spectrum::of(&DdInvariants::of(&cm.sigma))?;
    Ok((f64_of(s.minus), f64_of(s.plus), f64_of(s.tilde)))
}

/// Symplectic eigenvalues kept in double-double.
#[derive(Debug, Clone, Copy)]
struct Spectrum {
    minus: TwoFloat,
    plus: TwoFloat,
    tilde: TwoFloat,
}

fn roots(delta: TwoFloat, det: TwoFloat, what: &str) -> Result<(TwoFloat, TwoFloat)> {
    let zero = TwoFloat::from(0.0);
    let disc = delta * delta - det * 4.0;
    let scale = f64_of(delta).abs().max(1.0);
    if f64_of(disc) < -1e-10 * scale * scale {
        return Err(QsimError::Conditioning {
            context: format!("{what} discriminant"),
            value: f64_of(disc),
        });
    }
    let root = if disc > zero { disc.sqrt() } else { zero };
    let big = (delta + root) / 2.0;
    // small root from the product of the two, which avoids cancellation
    let small = if big > zero { det / big } else { zero };
    let sq = |x: TwoFloat| if x > zero { x.sqrt() } else { zero };
    Ok((sq(small), sq(big)))
}

impl Spectrum {
    fn of(inv: &DdInvariants) -> Result<Self> {
        let (minus, plus) = roots(inv.a + inv.b + inv.c * 2.0, inv.d, "symplectic")?;
        let (tilde, _) = roots(inv.a + inv.b - inv.c * 2.0, inv.d, "partial-transpose symplectic")?;
        Ok(Spectrum { minus, plus, tilde })
    }
}

/// Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue `x`.
pub fn entropy_f(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(QsimError::Conditioning {
            context: "entropy argument".into(),
            value: x,
        });
    }
    entropy_offset(x - 1.0)
}

/// `f(1 + delta)`, accurate for small `delta`.
fn entropy_offset(delta: f64) -> Result<f64> {
    if !delta.is_finite() || delta < -CLAMP {
        return Err(QsimError::Conditioning {
            context: "entropy argument below 1".into(),
            value: 1.0 + delta,
        });
    }
    if delta <= 0.0 {
        return Ok(0.0);
    }
    let q = delta / 2.0;
    let p = 1.0 + q;
    Ok((p * q.ln_1p() - q * q.ln()) / std::f64::consts::LN_2)
}

fn entropy_dd(x: TwoFloat) -> Result<f64> {
    entropy_offset(f64_of(x - 1.0))
}

/// Which closed-form branch of the conditional determinant applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `(D - AB)^2 <= (1 + B) C^2 (A + D)`: heterodyne-like optimum.
    First,
    /// Otherwise: homodyne-like optimum.
    Second,
    /// Product state (`C = 0`): `E_min = detA`.
    Uncorrelated,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::First => "1",
            Branch::Second => "2",
            Branch::Uncorrelated => "0",
        }
    }
}

/// Minimal conditional determinant of mode A after an optimal Gaussian
/// measurement on mode B.
pub fn e_min(inv: &Invariants) -> (f64, Branch) {
    let (e, b) = e_min_dd(&inv.to_dd());
    (f64_of(e), b)
}

fn e_min_dd(inv: &DdInvariants) -> (TwoFloat, Branch) {
    let zero = TwoFloat::from(0.0);
    let one = TwoFloat::from(1.0);
    let (a, b, c, d) = (inv.a, inv.b, inv.c, inv.d);
    let c2 = c * c;
    let bm1 = b - one;
    let dab = d - a * b;
    let tiny = 1e-24 * f64_of(a * b).max(1.0);
    // detC = 0 alone is not enough: a rank-one C still correlates the modes
    if f64_of(c2) <= tiny && f64_of(dab).abs() <= tiny {
        return (a, Branch::Uncorrelated);
    }
    let lhs = dab * dab;
    let rhs = (one + b) * c2 * (a + d);
    if lhs <= rhs {
        let inner = c2 + bm1 * (d - a);
        let root = if inner > zero { inner.sqrt() } else { zero };
        let e = (c2 * 2.0 + bm1 * (d - a) + c.abs() * root * 2.0) / (bm1 * bm1);
        (e, Branch::First)
    } else {
        let inner = c2 * c2 + lhs - c2 * (a * b + d) * 2.0;
        let root = if inner > zero { inner.sqrt() } else { zero };
        let e = (a * b - c2 + d - root) / (b * 2.0);
        (e, Branch::Second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneWay {
    pub discord: f64,
    pub classical: f64,
    pub e_min: f64,
    pub branch: Branch,
}

fn one_way(inv: &DdInvariants, spec: &Spectrum) -> Result<OneWay> {
    let zero = TwoFloat::from(0.0);
    let (e, branch) = e_min_dd(inv);
    let se = if e > zero { e.sqrt() } else { zero };
    let fe = entropy_dd(se)?;
    let discord = entropy_dd(inv.b.sqrt())? - entropy_dd(spec.minus)? - entropy_dd(spec.plus)? + fe;
    let classical = entropy_dd(inv.a.sqrt())? - fe;
    Ok(OneWay {
        discord,
        classical,
        e_min: f64_of(e),
        branch,
    })
}

/// Covariance matrix of modes `pair` from first and second moments.
pub fn covariance_from_moments(m: &MomentState, pair: (usize, usize)) -> Result<CovarianceMatrix> {
    let (i, j) = pair;
    if i >= 3 || j >= 3 {
        return Err(QsimError::ModeOutOfRange {
            mode: i.max(j),
            modes: 3,
        });
    }
    if i == j {
        return Err(QsimError::InvalidParam {
            field: "pair".into(),
            reason: "a correlation pair needs two distinct modes".into(),
        });
    }
    // rows of T map (a_k, a_k†) onto (x_k, p_k)
    let one = Complex64::new(1.0, 0.0);
    let im = Complex64::new(0.0, 1.0);
    let mut t = nalgebra::SMatrix::<Complex64, 4, 6>::zeros();
    for (slot, mode) in [(0, i), (2, j)] {
        t[(slot, mode)] = one;
        t[(slot, 3 + mode)] = one;
        t[(slot + 1, mode)] = -im;
        t[(slot + 1, 3 + mode)] = im;
    }
    let centered = m.second - m.mean * m.mean.transpose();
    let c = t * centered * t.transpose();
    let mut sigma = Matrix4::zeros();
    for k in 0..4 {
        for l in 0..4 {
            sigma[(k, l)] = 0.5 * (c[(k, l)] + c[(l, k)]).re;
        }
    }
    CovarianceMatrix::new(sigma, pair)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub mode_pair: (usize, usize),
    pub t: f64,
    pub det_a: f64,
    pub det_b: f64,
    pub det_c: f64,
    pub det_sigma: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub nu_tilde_minus: f64,
    pub mutual_info: f64,
    /// Discord with the measurement on the second mode of the pair.
    pub quantum_discord: f64,
    pub classical_corr: f64,
    pub branch: Branch,
    /// The same quantities with the measurement on the first mode.
    pub discord_measure_i: f64,
    pub classical_measure_i: f64,
    pub branch_measure_i: Branch,
    pub log_negativity: f64,
    /// Set when moments came from a truncated Fock state, which need not be
    /// exactly Gaussian.
    pub gaussian_approx: bool,
    pub warning: Option<String>,
}

pub fn log_negativity(cm: &CovarianceMatrix) -> Result<f64> {
    let (_, _, tilde) = symplectic_eigenvalues(cm)?;
    Ok(log_negativity_from(tilde))
}

fn log_negativity_from(nu_tilde: f64) -> f64 {
    if nu_tilde <= 0.0 {
        return f64::INFINITY;
    }
    (-nu_tilde.log2()).max(0.0)
}

/// Mutual information, discord and one-way classical correlations in both
/// measurement directions, plus log-negativity.
pub fn gaussian_discord(cm: &CovarianceMatrix) -> Result<CorrelationReport> {
    let dd = DdInvariants::of(&cm.sigma);
    let inv = dd.to_f64();
    let spec = Spectrum::of(&dd)?;
    let mutual = entropy_dd(dd.a.sqrt())? + entropy_dd(dd.b.sqrt())?
        - entropy_dd(spec.minus)?
        - entropy_dd(spec.plus)?;
    let on_j = one_way(&dd, &spec)?;
    let on_i = one_way(&dd.swapped(), &spec)?;
    let (nu_m, nu_p, nu_t) = (f64_of(spec.minus), f64_of(spec.plus), f64_of(spec.tilde));
    let warning = if cm.is_bona_fide() {
        None
    } else {
        Some(format!(
            "covariance violates sigma + i Omega >= 0 by {:e}",
            -cm.bona_fide_margin()
        ))
    };
    Ok(CorrelationReport {
        mode_pair: cm.mode_pair,
        t: 0.0,
        det_a: inv.det_a,
        det_b: inv.det_b,
        det_c: inv.det_c,
        det_sigma: inv.det_sigma,
        nu_minus: nu_m,
        nu_plus: nu_p,
        nu_tilde_minus: nu_t,
        mutual_info: mutual,
        quantum_discord: on_j.discord,
        classical_corr: on_j.classical,
        branch: on_j.branch,
        discord_measure_i: on_i.discord,
        classical_measure_i: on_i.classical,
        branch_measure_i: on_i.branch,
        log_negativity: log_negativity_from(nu_t),
        gaussian_approx: false,
        warning,
    })
}

/// Report for one sample of a trajectory.
pub fn correlation_at(m: &MomentState, pair: (usize, usize), gaussian_approx: bool) -> Result<CorrelationReport> {
    let cm = covariance_from_moments(m, pair)?;
    let mut r = gaussian_discord(&cm)?;
    r.t = m.t;
    r.gaussian_approx = gaussian_approx;
    Ok(r)
}
