use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::verification::IdentityReport;

/// Float formatting that stays parseable as TOML/CSV (`nan`, `inf`).
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e16) {
        format!("{x:e}")
    } else {
        format!("{}", x + 0.0)
    }
}

pub fn time_series_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = DiagnosticsRecord::HEADER.join(",");
    out.push('\n');
    for r in records {
        let row: Vec<String> = r.values().iter().map(|v| num(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Ordered `key = value` document.
#[derive(Debug, Default, Clone)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn float(&mut self, key: &str, v: f64) -> &mut Self {
        self.entries.push((key.into(), num(v)));
        self
    }

    pub fn int(&mut self, key: &str, v: usize) -> &mut Self {
        self.entries.push((key.into(), v.to_string()));
        self
    }

    pub fn text(&mut self, key: &str, v: &str) -> &mut Self {
        self.entries.push((key.into(), format!("{v:?}")));
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

pub fn identity_table(reports: &[IdentityReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:>12} {:>7} {:>10}  result", "identity", "max_error", "trials", "tolerance");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<28} {:>12.3e} {:>7} {:>10.1e}  {}",
            r.name,
            r.max_error,
            r.trials,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
