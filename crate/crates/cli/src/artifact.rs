//! CSV tables and their JSON manifests.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits in scientific notation; `NaN`, `inf`, `-inf` spelled out.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Result of one subcommand before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// Descriptive identifier of the estimate the experiment instantiates.
    pub estimate: &'static str,
    pub table: Table,
    /// Fitted constants, diagnostics and pass flags.
    pub summary: Map<String, Value>,
    pub tolerances: Map<String, Value>,
}

impl Outcome {
    pub fn new(estimate: &'static str, table: Table) -> Self {
        Self { estimate, table, summary: Map::new(), tolerances: Map::new() }
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.into(), json!(value));
    }

    pub fn tolerance(&mut self, key: &str, value: impl Serialize) {
        self.tolerances.insert(key.into(), json!(value));
    }
}

fn finite_or_text(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format_number(v))
    }
}

/// JSON value of a float slice that survives non-finite entries.
pub fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| finite_or_text(x)).collect())
}

pub fn float(v: f64) -> Value {
    finite_or_text(v)
}

pub struct Written {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

pub fn write_outcome(
    name: &str,
    dir: &Path,
    config: &ExperimentConfig,
    outcome: &Outcome,
    wall: Duration,
) -> Result<Written, CliError> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{name}.csv"));
    let manifest = dir.join(format!("{name}.manifest.json"));
    outcome.table.write(&csv)?;
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "subcommand": name,
        "estimate": outcome.estimate,
        "csv": csv.file_name().map(|s| s.to_string_lossy().to_string()),
        "columns": outcome.table.header,
        "rows": outcome.table.rows.len(),
        "seed": config.output.seed,
        "config": config,
        "versions": {
            "lapdecay": lapdecay_version(),
            "lapdecay-cli": env!("CARGO_PKG_VERSION"),
        },
        "wall_time_seconds": wall.as_secs_f64(),
        "tolerances": Value::Object(outcome.tolerances.clone()),
        "summary": Value::Object(outcome.summary.clone()),
    });
    std::fs::write(&manifest, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(Written { csv, manifest })
}

fn lapdecay_version() -> &'static str {
    // both crates are versioned together
    env!("CARGO_PKG_VERSION")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(f64::NAN), "NaN");
        assert_eq!(format_number(-f64::INFINITY), "-inf");
        let x = std::f64::consts::PI;
        assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn non_finite_json() {
        assert_eq!(floats(&[1.0, f64::NAN]), json!([1.0, "NaN"]));
    }
}
