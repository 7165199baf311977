//! CSV tables and JSON manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

/// One CSV cell. Numbers are written with 17 significant digits so every
/// double round-trips.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Paths of the files a command writes.
#[derive(Debug, Clone, Serialize)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: &Path, stem: &str) -> Self {
        OutputPaths { csv: dir.join(format!("{stem}.csv")), manifest: dir.join(format!("{stem}.json")) }
    }

    /// Fails if a file already exists and `overwrite` is off.
    pub fn prepare(&self, overwrite: bool) -> Result<(), CliError> {
        if !overwrite {
            for p in [&self.csv, &self.manifest] {
                if p.exists() {
                    return Err(CliError::Config(format!("{} exists; pass --overwrite to replace it", p.display())));
                }
            }
        }
        if let Some(dir) = self.csv.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
        }
        Ok(())
    }

    pub fn write(&self, table: &Table, manifest: &Value) -> Result<(), CliError> {
        fs::write(&self.csv, table.to_csv()?).map_err(|e| CliError::Io { path: self.csv.clone(), source: e })?;
        let mut text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        fs::write(&self.manifest, text).map_err(|e| CliError::Io { path: self.manifest.clone(), source: e })
    }
}

pub fn manifest(command: &str, config: Value, summary: Value, violations: &[String], paths: &OutputPaths) -> Value {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({
        "tool": "tunnelbound",
        "version": env!("CARGO_PKG_VERSION"),
        "library_version": tunnelbound::VERSION,
        "command": command,
        "config": config,
        "tolerances": {
            "dominance": crate::DOMINANCE_TOL,
        },
        "summary": summary,
        "dominance_violations": violations,
        "csv": paths.csv,
        "created_unix": created,
    })
}
