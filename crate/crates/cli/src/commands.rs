//! The `params`, `simulate` and `gain` pipelines.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qsim_core::circuit::{build_capacitance_matrix, derive_params, DerivedParams, SUBSTITUTIONS};
use qsim_core::evolve::{
    evolve_fock_checked, evolve_moments, BathSpec, EvolveOptions, InitialState, MomentState, Trajectory,
    TruncationReport,
};
use qsim_core::fock::FockSpace;
use qsim_core::gaussian::{correlation_at, CorrelationReport};
use qsim_core::langevin::{drift_matrix, gain_sweep, GainSweep, Peak};
use qsim_core::ode::{linear_grid, Method};
use qsim_core::quantization::{legendre_transform, to_ladder, LadderHamiltonian, Quadrature};
use qsim_core::units::HBAR;
use qsim_core::QsimError;
use rayon::prelude::*;

use crate::config::{parse_config, ConfigError, RunConfig, SolverChoice};
use crate::output::{num, sha256_hex, Meta, Table};
use crate::plot::{Chart, Series};

#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, source: io::Error },
    Config { path: PathBuf, error: ConfigError },
    Core(QsimError),
    Truncation(TruncationReport),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config { .. } => 2,
            CliError::Truncation(_) => 3,
            CliError::Core(e) => match e {
                QsimError::StepUnderflow { .. }
                | QsimError::NotConverged { .. }
                | QsimError::Conditioning { .. }
                | QsimError::InvalidState { .. }
                | QsimError::SingularResolvent { .. } => 3,
                QsimError::Unstable { .. } => 4,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Config { path, error } => {
                let msg = error.to_string();
                // positioned messages start with `line:column`
                let sep = if msg.starts_with(|c: char| c.is_ascii_digit()) { ":" } else { ": " };
                write!(f, "{}{sep}{msg}", path.display())
            }
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Truncation(r) => write!(
                f,
                "Fock truncation not converged: dims {:?} vs {:?} differ by {:e} (tolerance {:e}); \
                 raise --dims or lower the photon numbers",
                r.dims, r.grown_dims, r.max_deviation, r.tolerance
            ),
        }
    }
}

impl std::error::Error for CliError {}

impl From<QsimError> for CliError {
    fn from(e: QsimError) -> Self {
        CliError::Core(e)
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub dims: Option<[usize; 3]>,
    pub solver: Option<SolverChoice>,
    pub seed: Option<u64>,
}

/// A parsed config together with the hash of its bytes.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub hash: String,
}

pub fn load(path: &Path, ov: &Overrides) -> Result<Loaded, CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let mut config = parse_config(&text).map_err(|error| CliError::Config {
        path: path.to_path_buf(),
        error,
    })?;
    if let Some(d) = ov.dims {
        config.dims = d;
    }
    if let Some(s) = ov.solver {
        config.solver = s;
    }
    if let Some(s) = ov.seed {
        config.seed = s;
    }
    if let Some(o) = &ov.out {
        config.output_dir = o.clone();
    }
    Ok(Loaded {
        config,
        hash: sha256_hex(&bytes),
    })
}

/// Everything downstream of the circuit parameters.
#[derive(Debug, Clone)]
pub struct Model {
    pub derived: DerivedParams,
    pub ladder: LadderHamiltonian,
    pub bath: BathSpec,
}

pub fn build_model(cfg: &RunConfig) -> Result<Model, QsimError> {
    let cm = build_capacitance_matrix(&cfg.circuit, cfg.matrix_source)?;
    let derived = derive_params(&cfg.circuit, &cm)?;
    let qh = legendre_transform(&cfg.circuit, &cm)?;
    let mut ladder = to_ladder(&qh, &derived)?;
    for (key, c) in &cfg.extra_pairs {
        ladder.add_pair(*key, Complex64::new(*c, 0.0));
    }
    let kappa = std::array::from_fn(|i| cfg.circuit.kappa[i].unwrap_or(ladder.omega[i] / cfg.quality));
    let bath = BathSpec::thermal(cfg.circuit.t_bath, ladder.omega, kappa)?;
    Ok(Model { derived, ladder, bath })
}

fn base_meta(command: &str, loaded: &Loaded) -> Meta {
    let mut m = Meta::new(command, &loaded.hash, loaded.config.seed);
    m.push("matrix_source", loaded.config.matrix_source);
    for s in SUBSTITUTIONS {
        m.push("substitution", s);
    }
    for (key, c) in &loaded.config.extra_pairs {
        m.push("ledger_extra", format!("{key} {}", num(*c)));
    }
    m
}

fn bath_meta(m: &mut Meta, bath: &BathSpec) {
    m.push("T_bath_K", num(bath.t_bath));
    m.push("kappa_rad_per_s", bath.kappa.map(num).join(" "));
    m.push("nbar", bath.nbar.map(num).join(" "));
}

struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }
}

/// What a subcommand produced; `summary` goes to standard output.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

fn quadrature_name(q: Quadrature) -> &'static str {
    match q {
        Quadrature::Charge => "charge",
        Quadrature::Flux => "flux",
    }
}

pub fn cmd_params(loaded: &Loaded) -> Result<Outcome, CliError> {
    let model = build_model(&loaded.config)?;
    let lh = &model.ladder;
    let mut t = Table::new(&["term_kind", "mode_i", "mode_j", "form", "coeff_real", "coeff_imag"]);
    for (name, v) in model.derived.fields() {
        t.row(vec!["derived".into(), String::new(), String::new(), name.into(), num(v), "0".into()]);
    }
    for (i, w) in lh.omega.iter().enumerate() {
        let m = (i + 1).to_string();
        t.row(vec!["omega".into(), m.clone(), m, "number".into(), num(HBAR * w), "0".into()]);
    }
    for (key, c) in &lh.pairs {
        t.row(vec![
            "pair".into(),
            (key.i + 1).to_string(),
            (key.j + 1).to_string(),
            key.form(),
            num(c.re),
            num(c.im),
        ]);
    }
    for ((m, q), d) in &lh.drive {
        let m = (m + 1).to_string();
        t.row(vec!["drive".into(), m.clone(), m, quadrature_name(*q).into(), num(*d), "0".into()]);
    }
    let mut meta = base_meta("params", loaded);
    meta.push(
        "units",
        "derived rows in SI units of each field; omega, pair and drive rows in joules (drive per unit cos)",
    );
    meta.push("drive_freq_hz", num(lh.drive_freq));
    let mut w = Writer::new(&loaded.config.output_dir)?;
    w.put("params.csv", &t.render(&meta))?;
    let summary = lh
        .omega
        .iter()
        .enumerate()
        .map(|(i, w)| format!("mode {}: f = {} GHz", i + 1, num(w / (2.0 * std::f64::consts::PI) / 1e9)))
        .collect();
    Ok(Outcome {
        files: w.written,
        summary,
    })
}

const BASIS: [&str; 6] = ["a1", "a2", "a3", "a1d", "a2d", "a3d"];

fn trajectory_table(tr: &Trajectory) -> Table {
    let mut header: Vec<String> = vec!["t_ns".into(), "n1".into(), "n2".into(), "n3".into()];
    for i in 0..6 {
        for j in i..6 {
            header.push(format!("{}.{}_re", BASIS[i], BASIS[j]));
            header.push(format!("{}.{}_im", BASIS[i], BASIS[j]));
        }
    }
    let mut t = Table::new(&header);
    for (k, m) in tr.moments.iter().enumerate() {
        let mut row = vec![num(tr.times[k] * 1e9)];
        row.extend(tr.photon_numbers[k].iter().map(|n| num(*n)));
        for i in 0..6 {
            for j in i..6 {
                row.push(num(m.second[(i, j)].re));
                row.push(num(m.second[(i, j)].im));
            }
        }
        t.row(row);
    }
    t
}

fn ode_meta(m: &mut Meta, cfg: &RunConfig) {
    match cfg.ode.method {
        Method::DormandPrince45 => {
            m.push("method", "dp45");
            m.push("rtol", num(cfg.ode.rtol));
            m.push("atol", num(cfg.ode.atol));
        }
        Method::Rk4 { dt } => {
            m.push("method", "rk4");
            m.push("rk4_dt_s", num(dt));
        }
    }
}

fn initial_name(s: &InitialState) -> String {
    match s {
        InitialState::Vacuum => "vacuum".into(),
        InitialState::Thermal => "thermal".into(),
        InitialState::Fock(n) => format!("fock:{},{},{}", n[0], n[1], n[2]),
        InitialState::Occupations(n) => format!("occupations:{},{},{}", num(n[0]), num(n[1]), num(n[2])),
    }
}

fn correlation_rows(tr: &Trajectory, pair: (usize, usize)) -> Result<Vec<CorrelationReport>, QsimError> {
    let approx = tr.fock.is_some();
    tr.moments.par_iter().map(|m| correlation_at(m, pair, approx)).collect()
}

fn correlation_table(reports: &[CorrelationReport]) -> Table {
    let mut t = Table::new(&[
        "t_ns",
        "pair",
        "detA",
        "detB",
        "detC",
        "detSigma",
        "nu_minus",
        "nu_plus",
        "nu_tilde_minus",
        "mutual_info",
        "discord_measure_i",
        "discord_measure_j",
        "classical_i",
        "classical_j",
        "log_negativity",
    ]);
    for r in reports {
        t.row(vec![
            num(r.t * 1e9),
            pair_name(r.mode_pair),
            num(r.det_a),
            num(r.det_b),
            num(r.det_c),
            num(r.det_sigma),
            num(r.nu_minus),
            num(r.nu_plus),
            num(r.nu_tilde_minus),
            num(r.mutual_info),
            num(r.discord_measure_i),
            num(r.quantum_discord),
            num(r.classical_measure_i),
            num(r.classical_corr),
            num(r.log_negativity),
        ]);
    }
    t
}

fn pair_name(p: (usize, usize)) -> String {
    format!("{}-{}", p.0 + 1, p.1 + 1)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

pub fn cmd_simulate(loaded: &Loaded) -> Result<Outcome, CliError> {
    let cfg = &loaded.config;
    let model = build_model(cfg)?;
    let grid = linear_grid(cfg.t_end, cfg.samples)?;
    let opts = EvolveOptions {
        ode: cfg.ode,
        check_positivity: cfg.check_positivity,
        keep_states: false,
    };
    let mut runs: Vec<(Trajectory, Meta)> = Vec::new();
    let mut summary = Vec::new();
    let want_fock = matches!(cfg.solver, SolverChoice::Fock | SolverChoice::Both);
    let want_flow = matches!(cfg.solver, SolverChoice::MomentFlow | SolverChoice::Both);
    let space = FockSpace::new(cfg.dims)?;

    if want_fock {
        let (tr, report) =
            evolve_fock_checked(&model.ladder, &model.bath, &space, cfg.initial, &grid, &opts, cfg.truncation_tol)?;
        if !report.converged {
            return Err(CliError::Truncation(report));
        }
        let diag = tr.fock.as_ref().expect("Fock run carries diagnostics");
        let mut m = base_meta("simulate", loaded);
        m.push("source", "fock");
        m.push("dims", format!("{},{},{}", cfg.dims[0], cfg.dims[1], cfg.dims[2]));
        m.push("truncation_check_dims", format!("{:?}", report.grown_dims));
        m.push("truncation_deviation", num(report.max_deviation));
        m.push("truncation_tol", num(report.tolerance));
        m.push("max_trace_deviation", num(max_of(&diag.trace_dev)));
        m.push("max_hermiticity_error", num(max_of(&diag.hermiticity)));
        if !diag.min_eigenvalue.is_empty() {
            let lo = diag.min_eigenvalue.iter().copied().fold(f64::INFINITY, f64::min);
            m.push("min_eigenvalue", num(lo));
        }
        m.push("symmetrization_drift", num(diag.symmetrization_drift));
        runs.push((tr, m));
    }
    if want_flow {
        let mut m = base_meta("simulate", loaded);
        m.push("source", "moment_flow");
        let m0 = if want_fock {
            m.push("initial_moments", "taken from the truncated Fock state");
            MomentState::from_density(&cfg.initial.density(space, &model.bath)?, grid[0])
        } else {
            cfg.initial.moments(&model.bath, grid[0])
        };
        let tr = evolve_moments(&model.ladder, &model.bath, &m0, &grid, &opts)?;
        runs.push((tr, m));
    }

    let mut w = Writer::new(&cfg.output_dir)?;
    for (tr, meta) in &mut runs {
        let solver = tr.source.as_str();
        meta.push("initial_state", initial_name(&cfg.initial));
        meta.push("t_end_s", num(cfg.t_end));
        meta.push("samples", cfg.samples);
        ode_meta(meta, cfg);
        meta.push("ode_steps_accepted", tr.stats.accepted);
        meta.push("ode_steps_rejected", tr.stats.rejected);
        bath_meta(meta, &model.bath);
        w.put(&format!("trajectory_{solver}.csv"), &trajectory_table(tr).render(meta))?;

        let t_ns: Vec<f64> = tr.times.iter().map(|t| t * 1e9).collect();
        let n: [Vec<f64>; 3] = std::array::from_fn(|i| tr.photon_numbers.iter().map(|p| p[i]).collect());
        let chart = Chart {
            title: &format!("Photon numbers ({solver})"),
            x_label: "t (ns)",
            y_label: "<n>",
            series: (0..3)
                .map(|i| Series {
                    label: ["n1", "n2", "n3"][i],
                    x: &t_ns,
                    y: &n[i],
                })
                .collect(),
        };
        w.put(&format!("photons_{solver}.svg"), &chart.render())?;

        for &pair in &cfg.pairs {
            let reports = correlation_rows(tr, pair)?;
            let name = pair_name(pair);
            let mut cm = meta.clone();
            cm.push("units", "bits");
            cm.push("gaussian_approx", tr.fock.is_some());
            cm.push("measure_i", format!("measurement on mode {}", pair.0 + 1));
            cm.push("measure_j", format!("measurement on mode {}", pair.1 + 1));
            let warned = reports.iter().filter(|r| r.warning.is_some()).count();
            if warned > 0 {
                cm.push("warning", format!("{warned} samples are not bona fide covariance matrices"));
            }
            w.put(&format!("correlation_{solver}_{name}.csv"), &correlation_table(&reports).render(&cm))?;

            let col = |f: fn(&CorrelationReport) -> f64| reports.iter().map(f).collect::<Vec<f64>>();
            let (dj, di, cj, ci, en) = (
                col(|r| r.quantum_discord),
                col(|r| r.discord_measure_i),
                col(|r| r.classical_corr),
                col(|r| r.classical_measure_i),
                col(|r| r.log_negativity),
            );
            let peak = dj.iter().chain(&di).copied().fold(0.0, f64::max);
            summary.push(format!(
                "{solver} pair {name}: max discord {} bits, max log-negativity {} bits",
                num(peak),
                num(max_of(&en))
            ));
            let chart = Chart {
                title: &format!("Correlations {name} ({solver})"),
                x_label: "t (ns)",
                y_label: "bits",
                series: vec![
                    Series { label: "discord_j", x: &t_ns, y: &dj },
                    Series { label: "discord_i", x: &t_ns, y: &di },
                    Series { label: "classical_j", x: &t_ns, y: &cj },
                    Series { label: "classical_i", x: &t_ns, y: &ci },
                    Series { label: "log_negativity", x: &t_ns, y: &en },
                ],
            };
            w.put(&format!("correlation_{solver}_{name}.svg"), &chart.render())?;
        }
    }

    if let [(fock, _), (flow, _)] = runs.as_slice() {
        let mut t = Table::new(&["t_ns", "photon_deviation", "moment_deviation"]);
        let mut photon_max: f64 = 0.0;
        for k in 0..fock.times.len() {
            let dn = (0..3)
                .map(|i| (fock.photon_numbers[k][i] - flow.photon_numbers[k][i]).abs())
                .fold(0.0, f64::max);
            photon_max = photon_max.max(dn);
            t.row(vec![
                num(fock.times[k] * 1e9),
                num(dn),
                num(fock.moments[k].max_abs_diff(&flow.moments[k])),
            ]);
        }
        let dev = fock.max_deviation(flow)?;
        let mut m = base_meta("simulate", loaded);
        m.push("compared", "fock vs moment_flow");
        m.push("max_photon_deviation", num(photon_max));
        m.push("max_deviation", num(dev));
        w.put("deviation.csv", &t.render(&m))?;
        summary.push(format!("max deviation between solvers: {}", num(dev)));
    }
    Ok(Outcome {
        files: w.written,
        summary,
    })
}

fn peak_line(kind: &str, p: &Peak) -> String {
    format!(
        "{kind} f_GHz={} gain_db={} prominence_db={}",
        num(p.freq / 1e9),
        num(p.gain_db),
        num(p.prominence_db)
    )
}

pub fn run_gain(cfg: &RunConfig) -> Result<GainSweep, QsimError> {
    let model = build_model(cfg)?;
    let dm = drift_matrix(&model.ladder, &model.bath);
    gain_sweep(&dm, &cfg.sweep)
}

pub fn cmd_gain(loaded: &Loaded) -> Result<Outcome, CliError> {
    let cfg = &loaded.config;
    let sw = run_gain(cfg)?;
    let mut meta = base_meta("gain", loaded);
    meta.push("port_in", format!("a{}", sw.spec.port_in + 1));
    meta.push("port_out", format!("a{}", sw.spec.port_out + 1));
    meta.push("idler_port_in", format!("a{}d", sw.spec.port_in + 1));
    meta.push("convention", "a_out = sqrt(kappa) a - a_in; S = -K (M + i w)^-1 K - I");
    let mut summary = Vec::new();
    for p in &sw.signal_peaks {
        let l = peak_line("signal_peak", p);
        meta.push("peak", &l);
        summary.push(l);
    }
    for p in &sw.idler_peaks {
        let l = peak_line("idler_peak", p);
        meta.push("peak", &l);
        summary.push(l);
    }
    if let Some(p) = sw.dominant_peak() {
        let l = peak_line("dominant", &p);
        meta.push("peak", &l);
        summary.push(l);
    }
    if summary.is_empty() {
        summary.push("no peaks above 1 dB prominence".into());
    }
    let mut t = Table::new(&["f_GHz", "signal_gain_db", "idler_gain_db", "cond_number"]);
    for k in 0..sw.freqs.len() {
        t.row(vec![
            num(sw.freqs[k] / 1e9),
            num(sw.signal_gain_db[k]),
            num(sw.idler_gain_db[k]),
            num(sw.cond[k]),
        ]);
    }
    let mut w = Writer::new(&cfg.output_dir)?;
    w.put("gain.csv", &t.render(&meta))?;
    let f: Vec<f64> = sw.freqs.iter().map(|x| x / 1e9).collect();
    let chart = Chart {
        title: "Gain",
        x_label: "f (GHz)",
        y_label: "gain (dB)",
        series: vec![
            Series { label: "signal", x: &f, y: &sw.signal_gain_db },
            Series { label: "idler", x: &f, y: &sw.idler_gain_db },
        ],
    };
    w.put("gain.svg", &chart.render())?;
    Ok(Outcome {
        files: w.written,
        summary,
    })
}
