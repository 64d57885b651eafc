//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::{LN_2, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{Matrix2, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use qsim_cli::commands::{build_model, cmd_gain, cmd_params, cmd_simulate, load, run_gain, Loaded, Overrides};
use qsim_cli::config::SolverChoice;
use qsim_core::circuit::{build_capacitance_matrix, MatrixSource};
use qsim_core::evolve::{evolve_fock, evolve_fock_checked, evolve_moments, BathSpec, EvolveOptions, InitialState};
use qsim_core::fock::{DensityMatrix, FockSpace};
use qsim_core::gaussian::{gaussian_discord, CovarianceMatrix};
use qsim_core::langevin::{drift_matrix, gain_sweep, scattering, SweepSpec};
use qsim_core::quantization::{legendre_transform, LadderHamiltonian, PairKey, Quadrature};
use qsim_core::units::HBAR;
use qsim_oracles::gaussian::reference;
use qsim_oracles::ledger::{field_error, ledger};
use qsim_oracles::mechanics;
use qsim_oracles::sample::{pipeline, random_params, random_valid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn loaded(name: &str, ov: &Overrides) -> Loaded {
    load(&config(name), ov).unwrap_or_else(|e| panic!("{e}"))
}

fn ghz(f: f64) -> f64 {
    2.0 * PI * f * 1e9
}

fn within(elapsed: f64, limit: f64) -> Check {
    if elapsed < limit {
        Ok(String::new())
    } else {
        Err(format!("took {elapsed:.1} s, limit {limit} s"))
    }
}

fn ledger_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = (0.0, "");
    for _ in 0..100 {
        let (p, dp, _) = random_valid(&mut rng);
        let exact = ledger(&p).ok_or("oracle rejected a set the library accepted")?;
        for ((name, v), (_, ov)) in dp.fields().iter().zip(&exact) {
            let e = field_error(name, *v, *ov, &exact);
            if e > worst.0 {
                worst = (e, name);
            }
        }
    }
    let msg = format!("100 sets, worst relative error {:.2e} in {}", worst.0, worst.1);
    if worst.0 <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn legendre_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (phi0, q0) = ((HBAR * 50.0).sqrt(), (HBAR / 50.0).sqrt());
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (p, _, _) = random_valid(&mut rng);
        let cm = build_capacitance_matrix(&p, MatrixSource::NodeTotals).map_err(|e| e.to_string())?;
        let qh = legendre_transform(&p, &cm).map_err(|e| e.to_string())?;
        let m = mechanics::kinetic_matrix(&p);
        for _ in 0..1000 {
            let phi = Vector3::from_fn(|_, _| rng.random_range(-10.0..10.0) * phi0);
            let q = Vector3::from_fn(|_, _| rng.random_range(-10.0..10.0) * q0);
            let v = rng.random_range(-1e-3..1e-3);
            let (h, scale) = mechanics::hamiltonian(&p, &m, &phi, &q, v);
            let (h0, _) = mechanics::hamiltonian(&p, &m, &Vector3::zeros(), &Vector3::zeros(), v);
            worst = worst.max(((h - h0) - qh.energy(&phi, &q, v)).abs() / scale);
        }
    }
    let msg = format!("100 sets x 1000 points, worst relative error {worst:.2e}");
    if worst <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn lindblad_physicality() -> Check {
    let mut cfg = loaded("toy.ini", &Overrides::default()).config;
    cfg.circuit.t_bath = 0.15;
    let model = build_model(&cfg).map_err(|e| e.to_string())?;
    let space = FockSpace::new([6, 6, 6]).map_err(|e| e.to_string())?;
    let rho0 = InitialState::Fock([1, 1, 0]).density(space, &model.bath).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 1e-10).collect();
    let opts = EvolveOptions {
        check_positivity: true,
        ..EvolveOptions::default()
    };
    let tr = evolve_fock(&model.ladder, &model.bath, &space, &rho0, &grid, &opts).map_err(|e| e.to_string())?;
    let d = tr.fock.ok_or("no diagnostics")?;
    let trace = d.trace_dev.iter().copied().fold(0.0, f64::max);
    let herm = d.hermiticity.iter().copied().fold(0.0, f64::max);
    let min_eig = d.min_eigenvalue.iter().copied().fold(f64::INFINITY, f64::min);
    let msg = format!(
        "dims 6,6,6, nbar {:.3}, 101 samples: trace {trace:.1e}, hermiticity {herm:.1e}, min eigenvalue {min_eig:.1e}",
        model.bath.nbar[0]
    );
    if trace < 1e-8 && herm < 1e-9 && min_eig > -1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn analytic_damping() -> Check {
    let kappa = 1e8;
    let lh = LadderHamiltonian::harmonic([ghz(5.0), ghz(6.0), ghz(7.0)]);
    let opts = EvolveOptions::default();

    let cold = BathSpec::with_occupations(0.0, [0.0; 3], [kappa, 0.0, 0.0]).map_err(|e| e.to_string())?;
    let space = FockSpace::new([4, 2, 2]).map_err(|e| e.to_string())?;
    let one = DensityMatrix::fock(space, [1, 0, 0]).map_err(|e| e.to_string())?;
    let tr = evolve_fock(&lh, &cold, &space, &one, &[0.0, 1.0 / kappa], &opts).map_err(|e| e.to_string())?;
    let decay = (tr.photon_numbers[1][0] - (-1.0_f64).exp()).abs();

    let warm = BathSpec::with_occupations(0.0, [0.5, 0.0, 0.0], [kappa, 0.0, 0.0]).map_err(|e| e.to_string())?;
    let space = FockSpace::new([30, 2, 2]).map_err(|e| e.to_string())?;
    let vac = DensityMatrix::vacuum(space);
    let tr = evolve_fock(&lh, &warm, &space, &vac, &[0.0, 20.0 / kappa], &opts).map_err(|e| e.to_string())?;
    let fixed = (tr.photon_numbers[1][0] - 0.5).abs();

    let msg = format!("|n(1/kappa) - 1/e| = {decay:.1e}, |n(20/kappa) - 0.5| = {fixed:.1e}");
    if decay <= 1e-4 && fixed <= 1e-3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Couplings of every form between distinct modes at the size of the toy
/// circuit's, plus a drive.
fn weak_ledger<R: Rng>(rng: &mut R) -> LadderHamiltonian {
    let mut lh = LadderHamiltonian::harmonic([ghz(5.0), ghz(rng.random_range(5.5..6.5)), ghz(rng.random_range(4.0..4.5))]);
    let qs = [Quadrature::Charge, Quadrature::Flux];
    for i in 0..3 {
        for j in i + 1..3 {
            for &l in &qs {
                for &r in &qs {
                    let c = rng.random_range(-5e-27..5e-27);
                    let coeff = if (l == Quadrature::Charge) != (r == Quadrature::Charge) {
                        Complex64::new(0.0, c)
                    } else {
                        Complex64::new(c, 0.0)
                    };
                    lh.add_pair(PairKey::new(i, j, l, r), coeff);
                }
            }
        }
    }
    lh.drive.insert((0, Quadrature::Flux), rng.random_range(-5e-28..5e-28));
    lh.drive_freq = 5e9;
    lh
}

fn solver_agreement() -> Check {
    let toy = build_model(&loaded("toy.ini", &Overrides::default()).config).map_err(|e| e.to_string())?;
    let mut cases = vec![(toy.ladder, toy.bath, InitialState::Fock([1, 0, 0]))];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2 {
        let lh = weak_ledger(&mut rng);
        let bath = BathSpec::thermal(0.02, lh.omega, lh.omega.map(|w| w / 200.0)).map_err(|e| e.to_string())?;
        cases.push((lh, bath, InitialState::Fock([1, 0, 0])));
    }
    let space = FockSpace::new([4, 4, 4]).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 5e-11).collect();
    let opts = EvolveOptions::default();
    let (mut worst, mut truncation): (f64, f64) = (0.0, 0.0);
    for (lh, bath, init) in &cases {
        let (fock, report) = evolve_fock_checked(lh, bath, &space, *init, &grid, &opts, 1e-6).map_err(|e| e.to_string())?;
        let flow = evolve_moments(lh, bath, &init.moments(bath, 0.0), &grid, &opts).map_err(|e| e.to_string())?;
        worst = worst.max(fock.max_deviation(&flow).map_err(|e| e.to_string())?);
        truncation = truncation.max(report.max_deviation);
    }
    let msg = format!(
        "{} ledgers over 5 ns, worst moment deviation {worst:.2e} (dims 4 vs 6 differ by {truncation:.2e})",
        cases.len()
    );
    if worst <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rot(t: f64) -> Matrix2<f64> {
    Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos())
}

fn gaussian_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();

    // product thermal states under local symplectic maps
    let mut product: f64 = 0.0;
    for _ in 0..200 {
        let n = [1.0 + rng.random_range(0.0..40.0), 1.0 + rng.random_range(0.0..40.0)];
        let mut s = Matrix4::zeros();
        for m in 0..2 {
            let sq = Matrix2::new(rng.random_range(-1.0..1.0_f64).exp(), 0.0, 0.0, 1.0);
            let sq = sq / sq.determinant().sqrt();
            let local = rot(rng.random_range(0.0..6.3)) * sq * rot(rng.random_range(0.0..6.3));
            s.fixed_view_mut::<2, 2>(2 * m, 2 * m).copy_from(&local);
        }
        let sigma = s * Matrix4::from_diagonal(&Vector4::new(n[0], n[0], n[1], n[1])) * s.transpose();
        let r = gaussian_discord(&CovarianceMatrix::new((sigma + sigma.transpose()) * 0.5, (0, 1)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        product = product.max(r.quantum_discord.abs()).max(r.classical_corr.abs()).max(r.mutual_info.abs());
    }
    if product >= 1e-10 {
        failures.push(format!("product states reach {product:.1e} bits"));
    }

    let mut tmsv: f64 = 0.0;
    for r in [0.5, 1.0, 1.5] {
        let cm = CovarianceMatrix::two_mode_squeezed(r);
        let got = gaussian_discord(&cm).map_err(|e| e.to_string())?;
        let want = reference(&cm.sigma);
        tmsv = tmsv
            .max((got.log_negativity - 2.0 * r / LN_2).abs())
            .max((got.quantum_discord - want.discord_j).abs())
            .max((got.discord_measure_i - want.discord_i).abs());
    }
    if tmsv > 1e-9 {
        failures.push(format!("squeezed vacuum off by {tmsv:.1e} bits"));
    }

    // separable: identity plus a random positive semidefinite matrix
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst: f64 = 0.0;
    let mut above = 0;
    for _ in 0..500 {
        let k = rng.random_range(1..=4);
        let g = nalgebra::DMatrix::<f64>::from_fn(4, k, |_, _| rng.random_range(-1.0..1.0));
        let y = &g * g.transpose() * 10f64.powf(rng.random_range(-2.0..2.0));
        let sigma = Matrix4::identity() + Matrix4::from_fn(|i, j| y[(i, j)]);
        let r = gaussian_discord(&CovarianceMatrix::new(sigma, (0, 1)).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let d = r.quantum_discord.max(r.discord_measure_i);
        worst = worst.max(d);
        if d > 1.0 + 1e-6 {
            above += 1;
        }
    }
    if above > 0 {
        failures.push(format!(
            "{above} of 500 separable states exceed 1 bit (max {worst:.4} bits = {:.4} nats)",
            worst * LN_2
        ));
    }
    let msg = format!(
        "products max {product:.1e} bits, squeezed vacuum max error {tmsv:.1e}, separable max discord {worst:.4} bits"
    );
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", failures.join("; ")))
    }
}

fn scattering_sanity() -> Check {
    let lh = LadderHamiltonian::harmonic([ghz(5.0), ghz(6.0), ghz(7.0)]);
    let bath = BathSpec::with_occupations(0.0, [0.0; 3], lh.omega.map(|w| w / 50.0)).map_err(|e| e.to_string())?;
    let dm = drift_matrix(&lh, &bath);
    let mut all_pass: f64 = 0.0;
    for k in 0..=2000 {
        let s = scattering(&dm, ghz(1.0 + 9.0 * k as f64 / 2000.0)).map_err(|e| e.to_string())?;
        for p in 0..3 {
            all_pass = all_pass.max((s.s[(p, p)].norm() - 1.0).abs());
        }
    }

    let lossless = BathSpec::with_occupations(0.0, [0.0; 3], [0.0; 3]).map_err(|e| e.to_string())?;
    let (_, _, circuit) = random_valid(&mut ChaCha8Rng::seed_from_u64(7));
    let exact = scattering(&drift_matrix(&circuit, &lossless), ghz(5.0)).map_err(|e| e.to_string())?.s
        == -nalgebra::Matrix6::<Complex64>::identity();

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut passive = f64::NEG_INFINITY;
    let mut sets = 0;
    while sets < 20 {
        let mut p = random_params(&mut rng);
        p.gm1 = 0.0;
        p.gm2 = 0.0;
        let Ok((_, lh)) = pipeline(&p) else { continue };
        sets += 1;
        let bath = BathSpec::thermal(0.0, lh.omega, lh.omega.map(|w| w / rng.random_range(20.0..1000.0))).map_err(|e| e.to_string())?;
        let dm = drift_matrix(&lh, &bath);
        for port_in in 0..3 {
            for port_out in 0..3 {
                let spec = SweepSpec { f_lo: 1e9, f_hi: 12e9, n_points: 1001, port_in, port_out };
                let sw = gain_sweep(&dm, &spec).map_err(|e| e.to_string())?;
                passive = sw.signal_gain_db.iter().copied().fold(passive, f64::max);
            }
        }
    }
    let sweep = run_gain(&loaded("passive.ini", &Overrides::default()).config).map_err(|e| e.to_string())?;
    passive = sweep.signal_gain_db.iter().copied().fold(passive, f64::max);

    let msg = format!("||S11| - 1| <= {all_pass:.1e}, lossless S = -I exactly: {exact}, passive max {passive:.2} dB");
    if all_pass <= 1e-9 && exact && passive <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn column(path: &Path, name: &str) -> Result<Vec<f64>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or("empty file")?.split(',').collect();
    let k = header.iter().position(|h| *h == name).ok_or(format!("no column {name}"))?;
    lines.map(|l| l.split(',').nth(k).and_then(|v| v.parse().ok()).ok_or(format!("bad row {l}"))).collect()
}

fn qualitative_reproduction() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ov = Overrides {
        out: Some(dir.path().to_path_buf()),
        ..Overrides::default()
    };
    let amp = loaded("amplifier.ini", &ov);
    let model = build_model(&amp.config).map_err(|e| e.to_string())?;
    let f11 = model.derived.fields().iter().find(|(n, _)| *n == "w11").map(|(_, w)| w / (2.0 * PI * 1e9)).unwrap_or(f64::NAN);
    let mut failures = Vec::new();

    let sweep = run_gain(&amp.config).map_err(|e| e.to_string())?;
    let dominant = sweep.dominant_peak().ok_or("no gain peak")?;
    if sweep.signal_peaks.len() < 2 {
        failures.push(format!("{} gain peaks", sweep.signal_peaks.len()));
    }
    if !(4.7e9..=5.8e9).contains(&dominant.freq) {
        failures.push(format!("dominant peak at {:.3} GHz", dominant.freq / 1e9));
    }

    cmd_simulate(&amp).map_err(|e| e.to_string())?;
    let mut discord = Vec::new();
    for pair in ["1-2", "1-3"] {
        let f = dir.path().join(format!("correlation_moment_flow_{pair}.csv"));
        let d = column(&f, "discord_measure_j")?;
        let (k, max) = d.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, (k, v)| if v > a.1 { (k, v) } else { a });
        let last = *d.last().ok_or("empty trajectory")?;
        if !(max > 1.0 && 2 * k < d.len() && last < 1.0) {
            failures.push(format!("pair {pair}: discord max {max:.3} at sample {k}, final {last:.3}"));
        }
        discord.push(format!("{pair} max {max:.3} final {last:.3}"));
    }
    let mut en: f64 = 0.0;
    for pair in ["1-2", "1-3", "2-3"] {
        let f = dir.path().join(format!("correlation_moment_flow_{pair}.csv"));
        en = column(&f, "log_negativity")?.into_iter().fold(en, f64::max);
    }
    if en > 0.25 {
        failures.push(format!("log-negativity reaches {en:.3}"));
    }
    let msg = format!(
        "f11 {f11:.3} GHz, {} peaks, dominant {:.4} GHz; discord {}; max log-negativity {en:.3}",
        sweep.signal_peaks.len(),
        dominant.freq / 1e9,
        discord.join(", ")
    );
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", failures.join("; ")))
    }
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let p = e.map_err(|e| e.to_string())?.path();
        files.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).map_err(|e| e.to_string())?));
    }
    files.sort();
    Ok(files)
}

fn determinism() -> Check {
    let mut compared = 0;
    for (name, solver) in [("amplifier.ini", None), ("toy.ini", Some(SolverChoice::Both))] {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let ov = Overrides {
                out: Some(dir.path().to_path_buf()),
                solver,
                ..Overrides::default()
            };
            let l = loaded(name, &ov);
            let mut summary = Vec::new();
            summary.extend(cmd_params(&l).map_err(|e| e.to_string())?.summary);
            summary.extend(cmd_gain(&l).map_err(|e| e.to_string())?.summary);
            summary.extend(cmd_simulate(&l).map_err(|e| e.to_string())?.summary);
            runs.push((summary, snapshot(dir.path())?));
        }
        if runs[0] != runs[1] {
            let diff: Vec<&str> = runs[0].1.iter().zip(&runs[1].1).filter(|(a, b)| a != b).map(|(a, _)| a.0.as_str()).collect();
            return Err(format!("{name}: outputs differ ({diff:?})"));
        }
        compared += runs[0].1.len();
    }
    Ok(format!("params, gain and simulate on two configs, {compared} files byte-identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Check, f64); 9] = [
        ("ledger oracle", ledger_oracle, 5.0),
        ("Legendre identity", legendre_identity, 5.0),
        ("Lindblad physicality", lindblad_physicality, 120.0),
        ("analytic damping", analytic_damping, 30.0),
        ("solver cross-validation", solver_agreement, 60.0),
        ("Gaussian-metric oracles", gaussian_oracles, 60.0),
        ("scattering sanity", scattering_sanity, 10.0),
        ("qualitative reproduction", qualitative_reproduction, 300.0),
        ("determinism", determinism, f64::INFINITY),
    ];
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed().as_secs_f64();
        let result = result.and_then(|msg| within(elapsed, *limit).map(|_| msg));
        let (tag, msg) = match result {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {} {tag} [{name}] {msg} ({elapsed:.2} s)", k + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
