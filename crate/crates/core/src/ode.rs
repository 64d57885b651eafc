//! Explicit Runge-Kutta integration over complex state vectors.
//!
//! Adaptive Dormand-Prince 5(4) with FSAL and exact landing on every output
//! sample, plus a fixed-step classical RK4 kept for debugging.

use num_complex::Complex64;

use crate::error::{QsimError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    DormandPrince45,
    /// Classical RK4 with the given step (seconds); the last step before each
    /// sample is shortened so samples are hit exactly.
    Rk4 { dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub method: Method,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-8,
            atol: 1e-10,
            method: Method::DormandPrince45,
            h_init: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Dormand-Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `dy/dt = f(t, y)` from `t_grid[0]` (where `y` holds the initial
/// value) through every later grid point.
///
/// `post_step` may modify the state after each accepted step (e.g. to
/// re-symmetrize a density matrix) and returns whether it did. `on_sample`
/// is called with the state at every grid point including the first.
pub fn integrate<F, P, S>(
    mut f: F,
    y: &mut [Complex64],
    t_grid: &[f64],
    opts: &OdeOptions,
    mut post_step: P,
    mut on_sample: S,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    P: FnMut(f64, &mut [Complex64]) -> bool,
    S: FnMut(usize, f64, &[Complex64]) -> Result<()>,
{
    validate_grid(t_grid)?;
    on_sample(0, t_grid[0], y)?;
    match opts.method {
        Method::DormandPrince45 => dopri(&mut f, y, t_grid, opts, &mut post_step, &mut on_sample),
        Method::Rk4 { dt } => rk4(&mut f, y, t_grid, dt, &mut post_step, &mut on_sample),
    }
}

pub fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(QsimError::InvalidGrid {
            reason: "empty time grid".into(),
        });
    }
    if !t_grid.iter().all(|t| t.is_finite()) {
        return Err(QsimError::InvalidGrid {
            reason: "non-finite time".into(),
        });
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QsimError::InvalidGrid {
            reason: "times must be strictly increasing".into(),
        });
    }
    Ok(())
}

/// Evenly spaced grid of `samples` points on `[0, t_end]`.
pub fn linear_grid(t_end: f64, samples: usize) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || samples < 2 {
        return Err(QsimError::InvalidGrid {
            reason: format!("need t_end > 0 and samples >= 2 (got {t_end:e}, {samples})"),
        });
    }
    let n = samples - 1;
    Ok((0..samples)
        .map(|k| if k == n { t_end } else { t_end * k as f64 / n as f64 })
        .collect())
}

#[inline]
fn axpy_into(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

fn dopri<F, P, S>(
    f: &mut F,
    y: &mut [Complex64],
    t_grid: &[f64],
    opts: &OdeOptions,
    post_step: &mut P,
    on_sample: &mut S,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    P: FnMut(f64, &mut [Complex64]) -> bool,
    S: FnMut(usize, f64, &[Complex64]) -> Result<()>,
{
    let n = y.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut stats = OdeStats::default();

    let mut t = t_grid[0];
    let t_end = *t_grid.last().unwrap();
    if t_grid.len() == 1 {
        return Ok(stats);
    }
    f(t, y, &mut k1);
    stats.rhs_evals += 1;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => initial_step(y, &k1, opts, t_end - t),
    };
    let mut next = 1;
    let mut fac_old = 1e-4_f64;

    while next < t_grid.len() {
        let target = t_grid[next];
        let mut landing = false;
        if t + h >= target || (target - (t + h)) < 1e-12 * h {
            h = target - t;
            landing = true;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(t_end.abs()) || !h.is_finite() {
            return Err(QsimError::StepUnderflow { t });
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(QsimError::StepUnderflow { t });
        }

        axpy_into(&mut tmp, y, h, &[(A21, &k1)]);
        f(t + C2 * h, &tmp, &mut k2);
        axpy_into(&mut tmp, y, h, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * h, &tmp, &mut k3);
        axpy_into(&mut tmp, y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * h, &tmp, &mut k4);
        axpy_into(&mut tmp, y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + C5 * h, &tmp, &mut k5);
        axpy_into(
            &mut tmp,
            y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        f(t + h, &tmp, &mut k6);
        axpy_into(
            &mut y_new,
            y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        f(t + h, &y_new, &mut k7);
        stats.rhs_evals += 6;

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            let r = e.norm() / sc;
            err_sq += r * r;
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            let t_new = if landing { target } else { t + h };
            y.copy_from_slice(&y_new);
            if post_step(t_new, y) {
                f(t_new, y, &mut k1);
                stats.rhs_evals += 1;
            } else {
                std::mem::swap(&mut k1, &mut k7);
            }
            t = t_new;
            stats.accepted += 1;
            if landing {
                on_sample(next, t, y)?;
                next += 1;
            }
            // Gustafsson PI controller
            let err_c = err.max(1e-10);
            let fac = 0.9 * err_c.powf(-0.7 / 5.0) * fac_old.powf(0.4 / 5.0);
            fac_old = err_c;
            let fac = fac.clamp(0.2, 5.0);
            if !landing {
                h *= fac;
            } else {
                // keep the step the controller wanted, not the shortened one
                h = (h * fac).max(h);
            }
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= fac;
        }
    }
    Ok(stats)
}

fn initial_step(y: &[Complex64], f0: &[Complex64], opts: &OdeOptions, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = opts.atol + opts.rtol * yi.norm();
        d0 += (yi.norm() / sc).powi(2);
        d1 += (fi.norm() / sc).powi(2);
    }
    let n = y.len().max(1) as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12 * span)
}

fn rk4<F, P, S>(
    f: &mut F,
    y: &mut [Complex64],
    t_grid: &[f64],
    dt: f64,
    post_step: &mut P,
    on_sample: &mut S,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    P: FnMut(f64, &mut [Complex64]) -> bool,
    S: FnMut(usize, f64, &[Complex64]) -> Result<()>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(QsimError::InvalidGrid {
            reason: format!("RK4 step must be positive, got {dt:e}"),
        });
    }
    let n = y.len();
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut stats = OdeStats::default();
    let mut t = t_grid[0];
    for (idx, &target) in t_grid.iter().enumerate().skip(1) {
        while t < target {
            let (h, last) = if t + dt >= target * (1.0 - 1e-14) {
                (target - t, true)
            } else {
                (dt, false)
            };
            f(t, y, &mut k1);
            axpy_into(&mut tmp, y, h, &[(0.5, &k1)]);
            f(t + 0.5 * h, &tmp, &mut k2);
            axpy_into(&mut tmp, y, h, &[(0.5, &k2)]);
            f(t + 0.5 * h, &tmp, &mut k3);
            axpy_into(&mut tmp, y, h, &[(1.0, &k3)]);
            f(t + h, &tmp, &mut k4);
            for i in 0..n {
                y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
            stats.rhs_evals += 4;
            stats.accepted += 1;
            t = if last { target } else { t + h };
            post_step(t, y);
        }
        on_sample(idx, t, y)?;
    }
    Ok(stats)
}
