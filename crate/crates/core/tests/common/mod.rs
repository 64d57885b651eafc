#![allow(dead_code)]

use std::f64::consts::PI;

use qsim_core::evolve::BathSpec;
use qsim_core::quantization::LadderHamiltonian;

#[allow(unused_imports)]
pub use qsim_oracles::sample::{pipeline, random_params, random_valid, NH, PF};

pub fn bath_q(lh: &LadderHamiltonian, q: f64, t: f64) -> BathSpec {
    BathSpec::thermal(t, lh.omega, lh.omega.map(|w| w / q)).unwrap()
}

pub fn ghz(f: f64) -> f64 {
    2.0 * PI * f * 1e9
}

pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}
