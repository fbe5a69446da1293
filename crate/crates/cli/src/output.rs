//! Data tables, the JSON summary and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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

impl Cell {
    /// `f64` display is the shortest string that parses back to the same value.
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

pub struct Table {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&str]) -> Self {
        Self {
            name,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Columns `lag_0..lag_H` appended to `leading`.
    pub fn with_lags(name: &'static str, leading: &[&str], lags: usize) -> Self {
        let mut t = Self::new(name, leading);
        t.columns.extend((0..=lags).map(|h| format!("lag_{h}")));
        t
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| Value::Array(row.iter().map(Cell::json).collect()))
                    .collect();
                let doc = serde_json::json!({ "columns": self.columns, "rows": rows });
                let mut s = serde_json::to_string_pretty(&doc).expect("tables serialize");
                s.push('\n');
                s
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub command: &'a str,
    pub params: Value,
    pub metrics: Value,
    pub verdicts: Value,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct FileDigest {
    name: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'a str,
    command: &'a str,
    config: &'a Value,
    seed: u64,
    files: Vec<FileDigest>,
    workers: usize,
    wall_clock_seconds: f64,
}

/// Writes files into one directory and records their digests.
pub struct Writer {
    dir: PathBuf,
    format: Format,
    written: Vec<FileDigest>,
}

impl Writer {
    pub fn new(dir: &Path, format: Format) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: String, body: &[u8]) -> std::io::Result<()> {
        fs::write(self.dir.join(&name), body)?;
        self.written.push(FileDigest {
            name,
            sha256: hex(&Sha256::digest(body)),
            bytes: body.len(),
        });
        Ok(())
    }

    pub fn table(&mut self, table: &Table) -> std::io::Result<()> {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        self.write(format!("{}.{ext}", table.name), table.render(self.format).as_bytes())
    }

    pub fn summary(&mut self, summary: &Summary) -> std::io::Result<()> {
        let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
        s.push('\n');
        self.write("summary.json".into(), s.as_bytes())
    }

    pub fn manifest(self, summary: &Summary, workers: usize, wall_clock_seconds: f64) -> std::io::Result<()> {
        let manifest = Manifest {
            version: env!("CARGO_PKG_VERSION"),
            command: summary.command,
            config: &summary.params,
            seed: summary.seed,
            files: self.written,
            workers,
            wall_clock_seconds,
        };
        let mut s = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        s.push('\n');
        fs::write(self.dir.join("manifest.json"), s)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_floats() {
        let mut t = Table::new("t", &["a", "b"]);
        let x = 0.1 + 0.2;
        t.push(vec![Cell::from(x), Cell::from("x,y")]);
        let csv = t.render(Format::Csv);
        assert_eq!(csv.lines().next(), Some("a,b"));
        let first = csv.lines().nth(1).unwrap().split(',').next().unwrap();
        assert_eq!(first.parse::<f64>().unwrap(), x);
        assert!(csv.contains("\"x,y\""));
    }

    #[test]
    fn json_tables_keep_columns() {
        let mut t = Table::with_lags("t", &["draw"], 1);
        t.push(vec![Cell::from(0usize), Cell::from(1.5), Cell::from(-2.0)]);
        let v: Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        assert_eq!(v["columns"][2], "lag_1");
        assert_eq!(v["rows"][0][1], 1.5);
    }

    #[test]
    fn hex_digest() {
        assert_eq!(hex(&[0, 255, 16]), "00ff10");
    }
}
