//! Physical constants and unit-suffixed quantity parsing.
//!
//! Everything inside the crate is strict SI. Suffixes are only accepted at the
//! text boundary (config files) and normalized here.

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;

const PREFIXES: &[(&str, f64)] = &[
    ("f", 1e-15),
    ("p", 1e-12),
    ("n", 1e-9),
    ("u", 1e-6),
    ("µ", 1e-6),
    ("μ", 1e-6),
    ("m", 1e-3),
    ("k", 1e3),
    ("M", 1e6),
    ("G", 1e9),
    ("T", 1e12),
];

/// Base units understood by [`parse_quantity`]. `rad/s` is listed before `s`
/// so the longest suffix wins.
const BASE_UNITS: &[&str] = &["rad/s", "Hz", "F", "H", "S", "V", "K", "s"];

/// Parse a number with an optional SI-prefixed unit suffix, e.g. `1.5pF`,
/// `5.2 GHz`, `40mS`, `4.2K`, `2e9`. Returns the value in base SI units and
/// the base unit that was recognized (empty when none).
pub fn parse_quantity(text: &str) -> Result<(f64, &'static str), String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty value".into());
    }
    let split = numeric_prefix_len(s);
    if split == 0 {
        return Err(format!("`{s}` does not start with a number"));
    }
    let (num, rest) = s.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| format!("`{num}` is not a valid number"))?;
    let suffix = rest.trim();
    if suffix.is_empty() {
        return Ok((value, ""));
    }
    for base in BASE_UNITS {
        if let Some(prefix) = suffix.strip_suffix(base) {
            if prefix.is_empty() {
                return Ok((value, base));
            }
            if let Some((_, scale)) = PREFIXES.iter().find(|(p, _)| *p == prefix) {
                return Ok((value * scale, base));
            }
        }
    }
    Err(format!("unknown unit suffix `{suffix}`"))
}

/// Parse a quantity and require its unit (if any) to be `expected`.
pub fn parse_with_unit(text: &str, expected: &str) -> Result<f64, String> {
    let (value, unit) = parse_quantity(text)?;
    if unit.is_empty() || unit == expected {
        Ok(value)
    } else {
        Err(format!("expected unit `{expected}`, found `{unit}`"))
    }
}

fn numeric_prefix_len(s: &str) -> usize {
    let bytes = s.as_bytes();
    let mut i = 0;
    let mut seen_digit = false;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        seen_digit |= bytes[i].is_ascii_digit();
        i += 1;
    }
    if !seen_digit {
        return 0;
    }
    // exponent, only if followed by digits (so `5e` stays a unit error)
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > start {
            i = j;
        }
    }
    i
}
