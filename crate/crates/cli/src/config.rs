//! INI-style run configuration.
//!
//! ```text
//! [resonators]
//! L1 = 0.648nH
//! C1 = 1pF
//! ...
//! [simulate]
//! solver = moment_flow
//! pairs = 1-2, 1-3
//! ```
//!
//! Keys are the circuit field names; values take SI-prefixed unit suffixes.
//! Comments start with `#` or `;`. Unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use qsim_core::circuit::{CircuitParams, MatrixSource};
use qsim_core::evolve::InitialState;
use qsim_core::langevin::SweepSpec;
use qsim_core::ode::{Method, OdeOptions};
use qsim_core::quantization::{PairKey, Quadrature};
use qsim_core::units::parse_with_unit;
use qsim_core::QsimError;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, column: usize, message: String },
    UnknownSection { line: usize, name: String },
    UnknownKey { line: usize, column: usize, section: String, key: String },
    Duplicate { line: usize, section: String, key: String },
    MissingSection(String),
    MissingKey { section: String, key: String },
    Value { line: usize, column: usize, key: String, message: String },
    Invalid(QsimError),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, column, message } => write!(f, "{line}:{column}: {message}"),
            ConfigError::UnknownSection { line, name } => write!(f, "{line}:1: unknown section [{name}]"),
            ConfigError::UnknownKey { line, column, section, key } => {
                write!(f, "{line}:{column}: unknown key `{key}` in [{section}]")
            }
            ConfigError::Duplicate { line, section, key } => {
                write!(f, "{line}:1: `{key}` given twice in [{section}]")
            }
            ConfigError::MissingSection(s) => write!(f, "missing required section [{s}]"),
            ConfigError::MissingKey { section, key } => write!(f, "missing required key `{key}` in [{section}]"),
            ConfigError::Value { line, column, key, message } => write!(f, "{line}:{column}: `{key}`: {message}"),
            ConfigError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Fock,
    MomentFlow,
    Both,
}

impl std::str::FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "fock" => Ok(SolverChoice::Fock),
            "moment_flow" => Ok(SolverChoice::MomentFlow),
            "both" => Ok(SolverChoice::Both),
            other => Err(format!("unknown solver `{other}` (expected fock, moment_flow or both)")),
        }
    }
}

impl SolverChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverChoice::Fock => "fock",
            SolverChoice::MomentFlow => "moment_flow",
            SolverChoice::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub circuit: CircuitParams,
    pub matrix_source: MatrixSource,
    /// Quality factor for modes without an explicit `kappa`.
    pub quality: f64,
    pub dims: [usize; 3],
    pub solver: SolverChoice,
    pub t_end: f64,
    pub samples: usize,
    /// Zero-based mode pairs.
    pub pairs: Vec<(usize, usize)>,
    pub initial: InitialState,
    pub ode: OdeOptions,
    pub truncation_tol: f64,
    pub check_positivity: bool,
    pub sweep: SweepSpec,
    /// Synthetic bilinear terms (joules) added on top of the derived ledger.
    pub extra_pairs: Vec<(PairKey, f64)>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

const DEFAULT_QUALITY: f64 = 100.0;

type Table = BTreeMap<String, BTreeMap<String, Entry>>;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

/// `(section, allowed keys, required keys)`.
const SCHEMA: &[(&str, &[&str], &[&str])] = &[
    (
        "resonators",
        &["L1", "L2", "L3", "C1", "C2", "C3", "Cin", "Cout"],
        &["L1", "L2", "L3", "C1", "C2", "C3"],
    ),
    ("transistor1", &["Cgs1", "Cgd1", "Cds1", "gm1"], &[]),
    ("transistor2", &["Cgs2", "Cgd2", "Cds2", "gm2"], &[]),
    ("drive", &["Vin", "f_drive"], &[]),
    ("bath", &["T_bath", "kappa1", "kappa2", "kappa3", "Q"], &[]),
    ("model", &["matrix_source"], &[]),
    (
        "simulate",
        &[
            "t_end",
            "samples",
            "dims",
            "solver",
            "pairs",
            "initial_state",
            "rtol",
            "atol",
            "method",
            "rk4_dt",
            "truncation_tol",
            "check_positivity",
        ],
        &[],
    ),
    ("sweep", &["f_lo", "f_hi", "n_points", "port_in", "port_out"], &[]),
    (
        "ledger_extra",
        &[
            "minus_minus_11",
            "minus_plus_11",
            "plus_minus_11",
            "plus_plus_11",
            "minus_minus_12",
            "minus_plus_12",
            "plus_minus_12",
            "plus_plus_12",
            "minus_minus_13",
            "minus_plus_13",
            "plus_minus_13",
            "plus_plus_13",
            "minus_minus_22",
            "minus_plus_22",
            "plus_minus_22",
            "plus_plus_22",
            "minus_minus_23",
            "minus_plus_23",
            "plus_minus_23",
            "plus_plus_23",
            "minus_minus_33",
            "minus_plus_33",
            "plus_minus_33",
            "plus_plus_33",
        ],
        &[],
    ),
];

fn lex(text: &str) -> Result<Table, ConfigError> {
    let mut table = Table::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw);
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(ConfigError::Syntax {
                    line,
                    column: indent + trimmed.len() + 1,
                    message: "section header is missing `]`".into(),
                });
            };
            let name = name.trim().to_string();
            if !SCHEMA.iter().any(|(s, _, _)| *s == name) {
                return Err(ConfigError::UnknownSection { line, name });
            }
            if table.contains_key(&name) {
                return Err(ConfigError::Syntax {
                    line,
                    column: indent + 1,
                    message: format!("section [{name}] appears twice"),
                });
            }
            table.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(ConfigError::Syntax {
                line,
                column: indent + 1,
                message: "expected `key = value` or `[section]`".into(),
            });
        };
        let key = content[..eq].trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                column: eq + 1,
                message: "empty key".into(),
            });
        }
        let Some(section) = current.clone() else {
            return Err(ConfigError::Syntax {
                line,
                column: indent + 1,
                message: format!("`{key}` appears before any section header"),
            });
        };
        let allowed = SCHEMA.iter().find(|(s, _, _)| *s == section).unwrap().1;
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                line,
                column: indent + 1,
                section,
                key,
            });
        }
        let after = &content[eq + 1..];
        let value = after.trim().to_string();
        let column = eq + 2 + (after.len() - after.trim_start().len());
        let sec = table.get_mut(&section).unwrap();
        if sec.contains_key(&key) {
            return Err(ConfigError::Duplicate { line, section, key });
        }
        sec.insert(key, Entry { value, line, column });
    }
    Ok(table)
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(k) => &line[..k],
        None => line,
    }
}

struct Reader<'a> {
    table: &'a Table,
}

impl<'a> Reader<'a> {
    fn entry(&self, section: &str, key: &str) -> Option<&'a Entry> {
        self.table.get(section).and_then(|s| s.get(key))
    }

    fn map<T>(
        &self,
        section: &str,
        key: &str,
        f: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).map_err(|message| ConfigError::Value {
                line: e.line,
                column: e.column,
                key: key.to_string(),
                message,
            }),
        }
    }

    fn quantity(&self, section: &str, key: &str, unit: &str) -> Result<Option<f64>, ConfigError> {
        self.map(section, key, |v| parse_with_unit(v, unit))
    }

    fn quantity_or(&self, section: &str, key: &str, unit: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.quantity(section, key, unit)?.unwrap_or(default))
    }

    fn required(&self, section: &str, key: &str, unit: &str) -> Result<f64, ConfigError> {
        self.quantity(section, key, unit)?.ok_or_else(|| ConfigError::MissingKey {
            section: section.into(),
            key: key.into(),
        })
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.map(section, key, |v| v.parse::<T>().map_err(|e| e.to_string()))
    }
}

pub fn parse_dims(text: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated levels, got `{text}`"));
    }
    let mut dims = [0; 3];
    for (d, p) in dims.iter_mut().zip(parts) {
        *d = p.parse().map_err(|_| format!("`{p}` is not a level count"))?;
        if *d < 2 {
            return Err(format!("every mode needs at least 2 levels, got {d}"));
        }
    }
    Ok(dims)
}

fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (a, b) = item
            .split_once('-')
            .ok_or_else(|| format!("pair `{item}` should look like 1-2"))?;
        let a: usize = a.trim().parse().map_err(|_| format!("bad mode in `{item}`"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad mode in `{item}`"))?;
        if !(1..=3).contains(&a) || !(1..=3).contains(&b) || a == b {
            return Err(format!("pair `{item}` needs two distinct modes in 1..3"));
        }
        out.push((a.min(b) - 1, a.max(b) - 1));
    }
    if out.is_empty() {
        return Err("no pairs given".into());
    }
    Ok(out)
}

fn parse_triple<T: std::str::FromStr>(text: &str) -> Result<[T; 3], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got `{text}`"));
    }
    let v: Vec<T> = parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|_| format!("`{p}` is not a valid number")))
        .collect::<Result<_, _>>()?;
    let mut it = v.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

pub fn parse_initial(text: &str) -> Result<InitialState, String> {
    let t = text.trim();
    match t {
        "vacuum" => return Ok(InitialState::Vacuum),
        "thermal" => return Ok(InitialState::Thermal),
        _ => {}
    }
    if let Some(rest) = t.strip_prefix("fock:") {
        return Ok(InitialState::Fock(parse_triple(rest)?));
    }
    if let Some(rest) = t.strip_prefix("occupations:") {
        let n: [f64; 3] = parse_triple(rest)?;
        if n.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err("occupations must be finite and >= 0".into());
        }
        return Ok(InitialState::Occupations(n));
    }
    Err(format!(
        "unknown initial state `{t}` (expected vacuum, thermal, fock:n1,n2,n3 or occupations:n1,n2,n3)"
    ))
}

/// `minus_plus_13` is `(a1 - a1†)(a3 + a3†)`.
fn extra_key(name: &str) -> PairKey {
    let (form, modes) = name.rsplit_once('_').unwrap();
    let (l, r) = form.split_once('_').unwrap();
    let q = |s: &str| if s == "minus" { Quadrature::Charge } else { Quadrature::Flux };
    let m: Vec<usize> = modes.bytes().map(|b| (b - b'1') as usize).collect();
    PairKey::new(m[0], m[1], q(l), q(r))
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_port(text: &str) -> Result<usize, String> {
    let p: usize = text.trim().parse().map_err(|_| format!("`{text}` is not a mode number"))?;
    if !(1..=3).contains(&p) {
        return Err(format!("port must be a mode in 1..3, got {p}"));
    }
    Ok(p - 1)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table = lex(text)?;
    for (section, _, required) in SCHEMA {
        if !required.is_empty() && !table.contains_key(*section) {
            return Err(ConfigError::MissingSection(section.to_string()));
        }
    }
    let r = Reader { table: &table };
    let res = "resonators";
    let (t1, t2) = ("transistor1", "transistor2");
    let circuit = CircuitParams {
        l1: r.required(res, "L1", "H")?,
        l2: r.required(res, "L2", "H")?,
        l3: r.required(res, "L3", "H")?,
        c1: r.required(res, "C1", "F")?,
        c2: r.required(res, "C2", "F")?,
        c3: r.required(res, "C3", "F")?,
        c_in: r.quantity_or(res, "Cin", "F", 0.0)?,
        c_out: r.quantity_or(res, "Cout", "F", 0.0)?,
        cgs1: r.quantity_or(t1, "Cgs1", "F", 0.0)?,
        cgd1: r.quantity_or(t1, "Cgd1", "F", 0.0)?,
        cds1: r.quantity_or(t1, "Cds1", "F", 0.0)?,
        gm1: r.quantity_or(t1, "gm1", "S", 0.0)?,
        cgs2: r.quantity_or(t2, "Cgs2", "F", 0.0)?,
        cgd2: r.quantity_or(t2, "Cgd2", "F", 0.0)?,
        cds2: r.quantity_or(t2, "Cds2", "F", 0.0)?,
        gm2: r.quantity_or(t2, "gm2", "S", 0.0)?,
        v_in: r.quantity_or("drive", "Vin", "V", 0.0)?,
        f_drive: r.quantity_or("drive", "f_drive", "Hz", 0.0)?,
        t_bath: r.quantity_or("bath", "T_bath", "K", 0.0)?,
        kappa: [
            r.quantity("bath", "kappa1", "rad/s")?,
            r.quantity("bath", "kappa2", "rad/s")?,
            r.quantity("bath", "kappa3", "rad/s")?,
        ],
    };
    circuit.validate().map_err(ConfigError::Invalid)?;
    let quality = r.quantity_or("bath", "Q", "", DEFAULT_QUALITY)?;
    if !(quality.is_finite() && quality > 0.0) {
        let e = r.entry("bath", "Q").unwrap();
        return Err(ConfigError::Value {
            line: e.line,
            column: e.column,
            key: "Q".into(),
            message: "quality factor must be positive".into(),
        });
    }

    let sim = "simulate";
    let mut ode = OdeOptions::default();
    if let Some(v) = r.parsed::<f64>(sim, "rtol")? {
        ode.rtol = v;
    }
    if let Some(v) = r.parsed::<f64>(sim, "atol")? {
        ode.atol = v;
    }
    let rk4_dt = r.quantity(sim, "rk4_dt", "s")?;
    match r.map(sim, "method", |v| match v {
        "dp45" => Ok(false),
        "rk4" => Ok(true),
        other => Err(format!("unknown method `{other}` (expected dp45 or rk4)")),
    })? {
        Some(true) => {
            let dt = rk4_dt.ok_or_else(|| ConfigError::MissingKey {
                section: sim.into(),
                key: "rk4_dt".into(),
            })?;
            ode.method = Method::Rk4 { dt };
        }
        _ => ode.method = Method::DormandPrince45,
    }
    let t_end = r.quantity_or(sim, "t_end", "s", 10e-9)?;
    let samples = r.parsed::<usize>(sim, "samples")?.unwrap_or(201);
    if !(t_end.is_finite() && t_end > 0.0) || samples < 2 {
        return Err(ConfigError::Invalid(QsimError::InvalidGrid {
            reason: format!("need t_end > 0 and samples >= 2, got {t_end:e} and {samples}"),
        }));
    }

    let sw = "sweep";
    let defaults = SweepSpec::default();
    let sweep = SweepSpec {
        f_lo: r.quantity_or(sw, "f_lo", "Hz", defaults.f_lo)?,
        f_hi: r.quantity_or(sw, "f_hi", "Hz", defaults.f_hi)?,
        n_points: r.parsed::<usize>(sw, "n_points")?.unwrap_or(defaults.n_points),
        port_in: r.map(sw, "port_in", parse_port)?.unwrap_or(defaults.port_in),
        port_out: r.map(sw, "port_out", parse_port)?.unwrap_or(defaults.port_out),
    };
    if !(sweep.f_lo < sweep.f_hi) || sweep.n_points < 2 {
        return Err(ConfigError::Invalid(QsimError::InvalidParam {
            field: "sweep".into(),
            reason: "need f_lo < f_hi and n_points >= 2".into(),
        }));
    }

    let mut extra_pairs = Vec::new();
    if let Some(sec) = table.get("ledger_extra") {
        for name in sec.keys() {
            let v = r.parsed::<f64>("ledger_extra", name)?.unwrap();
            extra_pairs.push((extra_key(name), v));
        }
    }

    Ok(RunConfig {
        circuit,
        matrix_source: r.parsed::<MatrixSource>("model", "matrix_source")?.unwrap_or_default(),
        quality,
        dims: r.map(sim, "dims", parse_dims)?.unwrap_or([6, 6, 6]),
        solver: r.parsed::<SolverChoice>(sim, "solver")?.unwrap_or(SolverChoice::MomentFlow),
        t_end,
        samples,
        pairs: r.map(sim, "pairs", parse_pairs)?.unwrap_or_else(|| vec![(0, 1), (0, 2), (1, 2)]),
        initial: r.map(sim, "initial_state", parse_initial)?.unwrap_or(InitialState::Thermal),
        ode,
        truncation_tol: r.parsed::<f64>(sim, "truncation_tol")?.unwrap_or(1e-6),
        check_positivity: r.map(sim, "check_positivity", parse_bool)?.unwrap_or(true),
        sweep,
        extra_pairs,
        output_dir: PathBuf::from("."),
        seed: 0,
    })
}
