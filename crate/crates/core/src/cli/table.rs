use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) if v.is_nan() => Ok(()),
            Cell::Float(v) => write!(f, "{v:e}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
            Cell::Empty => Ok(()),
        }
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

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Named numeric columns, written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        ResultTable { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// CSV with a leading `config_hash` column on every row.
    pub fn to_csv(&self, config_hash: &str) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(std::iter::once("config_hash").chain(self.columns.iter().map(String::as_str)))?;
        for row in &self.rows {
            w.write_record(std::iter::once(config_hash.to_string()).chain(row.iter().map(Cell::to_string)))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub crate_version: &'a str,
    pub config_hash: String,
    pub seed: u64,
    pub created_unix: u64,
    pub tables: Vec<String>,
    pub config: &'a ExperimentConfig,
}

/// Writes the tables and `<command>.manifest.json` into the output directory.
pub fn write_artifacts(config: &ExperimentConfig, command: &str, tables: &[ResultTable]) -> Result<PathBuf, CliError> {
    let dir = &config.output;
    std::fs::create_dir_all(dir)?;
    let hash = config.hash();
    for t in tables {
        std::fs::write(dir.join(t.file_name()), t.to_csv(&hash)?)?;
    }
    let created_unix = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = Manifest {
        command,
        crate_version: env!("CARGO_PKG_VERSION"),
        config_hash: hash,
        seed: config.seed,
        created_unix,
        tables: tables.iter().map(ResultTable::file_name).collect(),
        config,
    };
    let path = dir.join(format!("{command}.manifest.json"));
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(path)
}

/// A CSV artifact read back as strings keyed by column name.
#[derive(Clone, Debug, Default)]
pub struct LoadedTable {
    pub rows: Vec<BTreeMap<String, String>>,
}

impl LoadedTable {
    pub fn read(path: &Path) -> Result<Option<Self>, CliError> {
        if !path.exists() {
            return Ok(None);
        }
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            rows.push(headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect());
        }
        Ok(Some(LoadedTable { rows }))
    }

    pub fn float(row: &BTreeMap<String, String>, col: &str) -> Option<f64> {
        row.get(col).and_then(|v| v.parse().ok())
    }

    pub fn int(row: &BTreeMap<String, String>, col: &str) -> Option<i64> {
        row.get(col).and_then(|v| v.parse().ok())
    }

    pub fn text<'a>(row: &'a BTreeMap<String, String>, col: &str) -> Option<&'a str> {
        row.get(col).map(String::as_str)
    }
}
