//! Durable outputs: ledger CSV files, text snapshots and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::analysis::ledger::EnergyLedger;
use crate::config::{parse_config, SimConfig};
use crate::dynamics::FieldState;
use crate::eos::EosSpec;
use crate::error::{Error, Result};
use crate::grid::{grid_with_spacing, Parity, RadialField};

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(contents.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// One header line plus one row per ledger entry, 17 significant digits.
pub fn write_ledger_csv(path: &Path, ledger: &EnergyLedger) -> Result<()> {
    let mut out = ledger.columns().join(",");
    out.push('\n');
    for row in ledger.rows() {
        let cells: Vec<String> = row.values().into_iter().map(sci).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a study table: one header line and one comma-separated row per
/// record. Cells are written as given.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Number cell with 17 significant digits; `None` becomes an empty cell.
pub fn cell(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

pub fn snapshot_path(dir: &Path, run_id: &str, index: usize) -> PathBuf {
    dir.join(format!("snap_{run_id}_{index}"))
}

/// Writes a snapshot: a `#` header with `t`, `n`, `h` and the gas, then the
/// columns `r p f g`.
pub fn write_snapshot(dir: &Path, run_id: &str, index: usize, state: &FieldState, eos: &EosSpec) -> Result<PathBuf> {
    let path = snapshot_path(dir, run_id, index);
    let grid = state.grid();
    let mut out = String::with_capacity(110 * grid.n() + 200);
    out.push_str(&format!("# t = {}\n", sci(state.t)));
    out.push_str(&format!("# n = {}\n", grid.n()));
    out.push_str(&format!("# h = {}\n", sci(grid.h())));
    out.push_str(&format!("# eos = {}\n", eos.descriptor()));
    out.push_str(&format!("# {:>24} {:>25} {:>25} {:>25}\n", "r", "p", "f", "g"));
    for j in 0..grid.n() {
        out.push_str(&format!(
            "{:>26} {:>25} {:>25} {:>25}\n",
            sci(grid.r(j)),
            sci(state.p.samples[j]),
            sci(state.f.samples[j]),
            sci(state.g.samples[j])
        ));
    }
    fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads a file written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<(FieldState, EosSpec)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut header = std::collections::BTreeMap::new();
    let mut columns: [Vec<f64>; 3] = Default::default();
    for (idx, line) in text.lines().enumerate() {
        let number = idx + 1;
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                header.insert(k.trim().to_string(), (number, v.trim().to_string()));
            }
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(number, e.to_string()))?;
        if values.len() != 4 {
            return Err(parse_err(number, format!("expected 4 columns, found {}", values.len())));
        }
        for c in 0..3 {
            columns[c].push(values[c + 1]);
        }
    }
    let field = |key: &str| {
        header
            .get(key)
            .cloned()
            .ok_or_else(|| parse_err(0, format!("missing header `{key}`")))
    };
    let number = |key: &str| -> Result<f64> {
        let (line, v) = field(key)?;
        v.parse().map_err(|_| parse_err(line, format!("invalid `{key}`")))
    };
    let (n_line, n_text) = field("n")?;
    let n: usize = n_text.parse().map_err(|_| parse_err(n_line, "invalid `n`".into()))?;
    let t = number("t")?;
    let h = number("h")?;
    let (eos_line, eos_text) = field("eos")?;
    let eos: EosSpec = eos_text.parse().map_err(|e: Error| parse_err(eos_line, e.to_string()))?;
    if columns[0].len() != n {
        return Err(parse_err(0, format!("header declares {n} nodes, found {}", columns[0].len())));
    }
    let grid = grid_with_spacing(h, n)?;
    let [p, f, g] = columns;
    let state = FieldState {
        t,
        p: RadialField::new(grid, p, Parity::Even)?,
        f: RadialField::new(grid, f, Parity::Odd)?,
        g: RadialField::new(grid, g, Parity::Odd)?,
    };
    Ok((state, eos))
}

/// Hex SHA-256 of the canonical configuration text.
pub fn spec_hash(config: &SimConfig) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Record of one invocation, written after it finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub run_id: String,
    pub config: SimConfig,
    pub outcome: String,
    pub wall_time: f64,
    /// Set when the study stopped before producing every output.
    pub partial: bool,
    pub acceptance: Vec<(String, bool)>,
    /// Study-specific results: thresholds, fit windows, exponents.
    pub results: Vec<(String, String)>,
}

/// Prefix of manifest keys that are not configuration keys.
pub const RESULT_PREFIX: &str = "result.";

impl RunManifest {
    pub fn new(run_id: impl Into<String>, config: SimConfig) -> Self {
        Self {
            run_id: run_id.into(),
            config,
            outcome: String::new(),
            wall_time: 0.0,
            partial: false,
            acceptance: Vec::new(),
            results: Vec::new(),
        }
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.to_string(), value.to_string()));
    }

    pub fn all_accepted(&self) -> bool {
        self.acceptance.iter().all(|a| a.1)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# configuration\n");
        out.push_str(&self.config.to_string());
        out.push_str("# results\n");
        let mut line = |k: &str, v: &str| out.push_str(&format!("{RESULT_PREFIX}{k} = {v}\n"));
        line("run_id", &self.run_id);
        line("code_version", env!("CARGO_PKG_VERSION"));
        line("spec_hash", &spec_hash(&self.config));
        line("eos", &self.config.eos.descriptor());
        line("grid", &format!("n={} r_max={:?}", self.config.n, self.config.r_max));
        line("outcome", &self.outcome);
        line("wall_time_s", &format!("{:.3}", self.wall_time));
        line("partial", if self.partial { "true" } else { "false" });
        for (name, ok) in &self.acceptance {
            line(&format!("accept.{name}"), if *ok { "pass" } else { "fail" });
        }
        for (k, v) in &self.results {
            line(k, v);
        }
        out
    }
}

/// Writes the manifest atomically.
pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    write_atomic(path, &manifest.render())
}

/// Splits manifest text into its configuration and its result entries.
pub fn parse_manifest(text: &str) -> Result<(SimConfig, Vec<(String, String)>)> {
    let mut config_text = String::new();
    let mut results = Vec::new();
    for line in text.lines() {
        let key = line.split('=').next().unwrap_or("").trim();
        match key.strip_prefix(RESULT_PREFIX) {
            Some(k) => {
                let value = line.split_once('=').map_or("", |p| p.1).trim();
                results.push((k.to_string(), value.to_string()));
                // keep line numbers aligned for config errors
                config_text.push('\n');
            }
            None => {
                config_text.push_str(line);
                config_text.push('\n');
            }
        }
    }
    Ok((parse_config(&config_text)?, results))
}
