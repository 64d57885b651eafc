mod common;

use common::*;
use nalgebra::{Matrix2, Matrix4};
use proptest::prelude::*;
use qsim_core::gaussian::{gaussian_discord, log_negativity, symplectic_eigenvalues, symplectic_form, CovarianceMatrix};
use qsim_oracles::gaussian::reference;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rot(t: f64) -> Matrix2<f64> {
    Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos())
}

fn local(a: Matrix2<f64>, b: Matrix2<f64>) -> Matrix4<f64> {
    let mut s = Matrix4::zeros();
    s.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    s.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
    s
}

fn squeezer(r: f64) -> Matrix2<f64> {
    Matrix2::new(r.exp(), 0.0, 0.0, (-r).exp())
}

fn random_local<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let mut one = || rot(rng.random_range(0.0..6.3)) * squeezer(rng.random_range(-1.0..1.0)) * rot(rng.random_range(0.0..6.3));
    let a = one();
    local(a, one())
}

fn beam_splitter(t: f64) -> Matrix4<f64> {
    let (c, s) = (t.cos(), t.sin());
    Matrix4::new(c, 0.0, s, 0.0, 0.0, c, 0.0, s, -s, 0.0, c, 0.0, 0.0, -s, 0.0, c)
}

fn two_mode_squeezer(r: f64) -> Matrix4<f64> {
    let (c, s) = (r.cosh(), r.sinh());
    Matrix4::new(c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c)
}

/// A random bona fide state: thermal spectrum under a random symplectic map.
fn random_state<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let (n1, n2) = (1.0 + rng.random_range(0.0..4.0_f64).powi(2), 1.0 + rng.random_range(0.0..2.0));
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(n1, n1, n2, n2));
    let s = random_local(rng) * two_mode_squeezer(rng.random_range(0.0..1.2)) * beam_splitter(rng.random_range(0.0..1.6)) * random_local(rng);
    let sigma = s * d * s.transpose();
    (sigma + sigma.transpose()) * 0.5
}

#[test]
fn symplectic_spectrum_matches_eigenvalues_of_omega_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let sigma = random_state(&mut rng);
        let cm = CovarianceMatrix::new(sigma, (0, 1)).unwrap();
        let (minus, plus, _) = symplectic_eigenvalues(&cm).unwrap();
        let mut ev: Vec<f64> = (symplectic_form() * sigma).complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
        ev.sort_by(f64::total_cmp);
        assert!((minus - ev[0]).abs() < 1e-9 * ev[3], "{minus} vs {ev:?}");
        assert!((plus - ev[3]).abs() < 1e-9 * ev[3], "{plus} vs {ev:?}");
    }
}

#[test]
fn random_states_match_exact_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for _ in 0..300 {
        let sigma = random_state(&mut rng);
        let got = gaussian_discord(&CovarianceMatrix::new(sigma, (0, 1)).unwrap()).unwrap();
        let r = reference(&sigma);
        for (a, b) in [
            (got.mutual_info, r.mutual_info),
            (got.quantum_discord, r.discord_j),
            (got.classical_corr, r.classical_j),
            (got.discord_measure_i, r.discord_i),
            (got.classical_measure_i, r.classical_i),
            (got.log_negativity, r.log_negativity),
            (got.nu_minus, r.nu_minus),
            (got.nu_tilde_minus, r.nu_tilde_minus),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn two_mode_squeezed_vacuum() {
    for r in [0.1, 0.5, 1.0, 1.5, 2.0] {
        let cm = CovarianceMatrix::two_mode_squeezed(r);
        let got = gaussian_discord(&cm).unwrap();
        let want = reference(&cm.sigma);
        assert!((got.log_negativity - 2.0 * r / std::f64::consts::LN_2).abs() < 1e-9);
        assert!((got.quantum_discord - want.discord_j).abs() < 1e-9);
        // pure: discord is the entanglement entropy, half the mutual information
        assert!((2.0 * got.quantum_discord - got.mutual_info).abs() < 1e-9);
    }
}

/// Thermal light on one port of an unbalanced beam splitter, vacuum on the other. It is
/// separable but its discord exceeds one bit for bright enough input.
#[test]
fn split_thermal_light_is_separable_with_discord_above_one() {
    let n = 17.0;
    let input = Matrix4::from_diagonal(&nalgebra::Vector4::new(2.0 * n + 1.0, 2.0 * n + 1.0, 1.0, 1.0));
    let bs = beam_splitter(0.5);
    let sigma = bs * input * bs.transpose();
    let got = gaussian_discord(&CovarianceMatrix::new(sigma, (0, 1)).unwrap()).unwrap();
    assert_eq!(got.log_negativity, 0.0);
    assert!(got.quantum_discord > 1.0, "{}", got.quantum_discord);
    assert!((got.quantum_discord - reference(&sigma).discord_j).abs() < 1e-9);
}

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn mutual_information_splits(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = gaussian_discord(&CovarianceMatrix::new(random_state(&mut rng), (0, 1)).unwrap()).unwrap();
        prop_assert!((r.mutual_info - r.quantum_discord - r.classical_corr).abs() < 1e-8);
        prop_assert!((r.mutual_info - r.discord_measure_i - r.classical_measure_i).abs() < 1e-8);
        prop_assert!(r.quantum_discord > -1e-9 && r.classical_corr > -1e-9);
    }

    #[test]
    fn invariant_under_local_symplectic_maps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = random_state(&mut rng);
        let s = random_local(&mut rng);
        let a = gaussian_discord(&CovarianceMatrix::new(sigma, (0, 1)).unwrap()).unwrap();
        let moved = s * sigma * s.transpose();
        let b = gaussian_discord(&CovarianceMatrix::new((moved + moved.transpose()) * 0.5, (0, 1)).unwrap()).unwrap();
        prop_assert!((a.quantum_discord - b.quantum_discord).abs() < 1e-9);
        prop_assert!((a.mutual_info - b.mutual_info).abs() < 1e-9);
        prop_assert!((a.log_negativity - b.log_negativity).abs() < 1e-9);
    }

    #[test]
    fn squeezing_raises_every_measure(r in 0.01..2.0_f64, dr in 0.01..0.5_f64) {
        let a = gaussian_discord(&CovarianceMatrix::two_mode_squeezed(r)).unwrap();
        let b = gaussian_discord(&CovarianceMatrix::two_mode_squeezed(r + dr)).unwrap();
        prop_assert!(b.quantum_discord > a.quantum_discord);
        prop_assert!(b.mutual_info > a.mutual_info);
        prop_assert!(b.log_negativity > a.log_negativity);
    }

    #[test]
    fn product_states_carry_nothing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n1 = 1.0 + rng.random_range(0.0..20.0);
        let n2 = 1.0 + rng.random_range(0.0..20.0);
        let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(n1, n1, n2, n2));
        let s = random_local(&mut rng);
        let sigma = s * d * s.transpose();
        let r = gaussian_discord(&CovarianceMatrix::new((sigma + sigma.transpose()) * 0.5, (0, 1)).unwrap()).unwrap();
        prop_assert!(r.mutual_info.abs() < 1e-10);
        prop_assert!(r.quantum_discord.abs() < 1e-10);
        prop_assert_eq!(r.log_negativity, 0.0);
    }

    #[test]
    fn classically_mixed_states_are_not_entangled(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..=4);
        let g = nalgebra::DMatrix::<f64>::from_fn(4, k, |_, _| rng.random_range(-1.0..1.0));
        let y = &g * g.transpose() * 10f64.powf(rng.random_range(-2.0..2.0));
        let sigma = Matrix4::identity() + Matrix4::from_fn(|i, j| y[(i, j)]);
        let cm = CovarianceMatrix::new(sigma, (0, 1)).unwrap();
        prop_assert!(log_negativity(&cm).unwrap() < 1e-12);
        // the separable bound is one nat, not one bit
        let r = gaussian_discord(&cm).unwrap();
        prop_assert!(r.quantum_discord <= 1.0 / std::f64::consts::LN_2 + 1e-9);
        prop_assert!(r.discord_measure_i <= 1.0 / std::f64::consts::LN_2 + 1e-9);
    }
}
