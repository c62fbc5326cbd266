//! CSV and JSON artifacts.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Value};

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

/// Coordinates joined with `;`.
pub fn point(x: &[f64]) -> String {
    x.iter().map(|&v| num(v)).collect::<Vec<_>>().join(";")
}

/// JSON number, or a string for non-finite values.
pub fn jnum(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(num(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// `config_hash` is prepended to `columns`.
    pub fn new(columns: &[&'static str]) -> Self {
        let mut header = vec!["config_hash"];
        header.extend_from_slice(columns);
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, hash: &str, cells: Vec<String>) {
        debug_assert_eq!(cells.len() + 1, self.header.len());
        let mut row = Vec::with_capacity(cells.len() + 1);
        row.push(hash.to_string());
        row.extend(cells);
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub table: Option<Table>,
    pub summary: Value,
    /// Contract violations: exit 1.
    pub failures: Vec<String>,
    /// Integrability diagnostics: exit 0 unless strict.
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self, strict: bool) -> i32 {
        if !self.failures.is_empty() || (strict && !self.warnings.is_empty()) {
            1
        } else {
            0
        }
    }
}

pub fn write_artifacts(
    dir: &Path,
    command: &str,
    hash: &str,
    seed: u64,
    outcome: &Outcome,
    exit_code: i32,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    if let Some(table) = &outcome.table {
        table.write(&dir.join(format!("{command}.csv")))?;
    }
    let doc = json!({
        "command": command,
        "config_hash": hash,
        "seed": seed,
        "exit_code": exit_code,
        "failures": outcome.failures,
        "warnings": outcome.warnings,
        "summary": outcome.summary,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(io::Error::other)?;
    fs::write(dir.join(format!("{command}.json")), text + "\n")
}
