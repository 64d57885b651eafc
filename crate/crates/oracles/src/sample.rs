//! Random circuit parameters around the few-GHz, sub-pF operating region.

use qsim_core::circuit::{build_capacitance_matrix, derive_params, CircuitParams, DerivedParams, MatrixSource};
use qsim_core::quantization::{legendre_transform, to_ladder, LadderHamiltonian};
use rand::Rng;

pub const PF: f64 = 1e-12;
pub const NH: f64 = 1e-9;

pub fn random_params<R: Rng>(rng: &mut R) -> CircuitParams {
    let mut p = CircuitParams::uncoupled(NH, PF);
    p.l1 = rng.random_range(0.3..1.5) * NH;
    p.l2 = rng.random_range(0.3..1.5) * NH;
    p.l3 = rng.random_range(0.3..1.5) * NH;
    p.c1 = rng.random_range(0.5..2.0) * PF;
    p.c2 = rng.random_range(0.5..2.0) * PF;
    p.c3 = rng.random_range(0.5..2.0) * PF;
    p.c_in = rng.random_range(0.0..0.1) * PF;
    p.c_out = rng.random_range(0.0..0.1) * PF;
    p.cgs1 = rng.random_range(0.0..0.1) * PF;
    p.cgs2 = rng.random_range(0.0..0.1) * PF;
    p.cgd1 = rng.random_range(0.0..0.05) * PF;
    p.cgd2 = rng.random_range(0.0..0.05) * PF;
    p.cds1 = rng.random_range(0.0..0.3) * PF;
    p.cds2 = rng.random_range(0.0..0.3) * PF;
    p.gm1 = rng.random_range(0.0..10e-3);
    p.gm2 = rng.random_range(0.0..10e-3);
    p.v_in = rng.random_range(-1e-3..1e-3);
    p.f_drive = rng.random_range(4e9..6e9);
    p
}

pub fn pipeline(p: &CircuitParams) -> qsim_core::Result<(DerivedParams, LadderHamiltonian)> {
    let cm = build_capacitance_matrix(p, MatrixSource::NodeTotals)?;
    let dp = derive_params(p, &cm)?;
    let qh = legendre_transform(p, &cm)?;
    let lh = to_ladder(&qh, &dp)?;
    Ok((dp, lh))
}

/// Draw until the full pipeline succeeds.
pub fn random_valid<R: Rng>(rng: &mut R) -> (CircuitParams, DerivedParams, LadderHamiltonian) {
    for _ in 0..10_000 {
        let p = random_params(rng);
        if let Ok((dp, lh)) = pipeline(&p) {
            return (p, dp, lh);
        }
    }
    panic!("no valid parameter set found");
}
