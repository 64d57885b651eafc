//! CSV files with `#` metadata headers.

use std::fmt::Display;

use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("qsim ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest text that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Ordered `# key: value` lines.
#[derive(Debug, Clone, Default)]
pub struct Meta {
    lines: Vec<(String, String)>,
}

impl Meta {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        let mut m = Meta::default();
        m.push("tool", TOOL);
        m.push("command", command);
        m.push("config_sha256", config_hash);
        m.push("seed", seed);
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
    }
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self, meta: &Meta) -> String {
        let mut s = meta.render();
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, -2.5e-17, 6.62e-34, 5.2e9, 1.0 / 3.0, 1e15, 1e-4] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(5.2e9), "5200000000");
        assert_eq!(num(1e-20), "1e-20");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.row(vec!["1".into(), "2".into()]);
        let mut meta = Meta::default();
        meta.push("k", 3);
        assert_eq!(t.render(&meta), "# k: 3\na,b\n1,2\n");
        assert_eq!(sha256_hex(b"").len(), 64);
    }
}
