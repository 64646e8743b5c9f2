//! Result records, numeric tables and their CSV form.

use crate::error::CliError;
use robinspec_core::fixtures::{FixtureFile, FixtureRecord};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Where a column's numbers come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Echo of a configuration value.
    Input,
    /// Returned by a toolkit operation during this run.
    Computed,
    /// Read from the fixture file.
    Fixture,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Input => "input",
            Provenance::Computed => "computed",
            Provenance::Fixture => "fixture",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    /// `1` for dimensionless numbers, `text` for labels.
    pub unit: String,
    pub provenance: Provenance,
}

impl Column {
    pub fn new(name: &str, unit: &str, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            provenance,
        }
    }

    pub fn header(&self) -> String {
        format!("{} ({}; {})", self.name, self.unit, self.provenance.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Integer(i64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Number(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Integer(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Integer(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Number)
    }
}

/// Twelve significant digits, `%g` style.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..12).contains(&exponent) {
        let decimals = (11 - exponent).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exponent}", trim(mantissa.to_string()))
    }
}

impl Cell {
    pub fn to_csv(&self) -> String {
        match self {
            Cell::Number(v) => format_number(*v),
            Cell::Integer(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => quote(s),
            Cell::Missing => String::new(),
        }
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: Vec<Column>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.columns.iter().map(|c| quote(&c.header())).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

/// A one-row table of headline values, built key by key.
#[derive(Debug, Default)]
pub struct Summary {
    columns: Vec<Column>,
    values: Vec<Cell>,
}

impl Summary {
    pub fn add(&mut self, name: &str, unit: &str, provenance: Provenance, value: impl Into<Cell>) -> &mut Self {
        self.columns.push(Column::new(name, unit, provenance));
        self.values.push(value.into());
        self
    }

    pub fn computed(&mut self, name: &str, value: impl Into<Cell>) -> &mut Self {
        self.add(name, "1", Provenance::Computed, value)
    }

    pub fn fixture(&mut self, name: &str, value: impl Into<Cell>) -> &mut Self {
        self.add(name, "1", Provenance::Fixture, value)
    }

    pub fn input(&mut self, name: &str, value: impl Into<Cell>) -> &mut Self {
        self.add(name, "1", Provenance::Input, value)
    }

    pub fn into_table(self) -> Table {
        Table {
            name: "summary".into(),
            columns: self.columns,
            rows: vec![self.values],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureUse {
    pub name: String,
    #[serde(flatten)]
    pub record: FixtureRecord,
}

/// Fixture lookups that remember what was read.
#[derive(Debug)]
pub struct FixtureSource {
    pub path: String,
    file: FixtureFile,
    used: BTreeMap<String, FixtureRecord>,
}

impl FixtureSource {
    pub fn new(path: String, file: FixtureFile) -> Self {
        Self {
            path,
            file,
            used: BTreeMap::new(),
        }
    }

    pub fn value(&mut self, name: &str) -> Result<f64, CliError> {
        let record = self
            .file
            .records
            .get(name)
            .ok_or_else(|| CliError::Validation(format!("fixture '{name}' missing from {}", self.path)))?;
        self.used.insert(name.into(), record.clone());
        Ok(record.value)
    }

    pub fn used(&self) -> Vec<FixtureUse> {
        self.used
            .iter()
            .map(|(name, record)| FixtureUse {
                name: name.clone(),
                record: record.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub solver_failure: bool,
    pub detail: String,
}

impl From<&CliError> for ErrorRecord {
    fn from(e: &CliError) -> Self {
        let (solver_failure, detail) = match e {
            CliError::Compute(inner) => (inner.is_solver_failure(), format!("{inner:?}")),
            other => (false, format!("{other:?}")),
        };
        Self {
            kind: e.kind(),
            message: e.to_string(),
            solver_failure,
            detail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

/// Everything a run leaves behind, serialized as `result.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub toolkit: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Keys as given in the config file and flags.
    pub config: BTreeMap<String, String>,
    /// Every parameter after defaults and typed parsing.
    pub parameters: serde_json::Value,
    pub status: Status,
    pub error: Option<ErrorRecord>,
    pub tables: Vec<Table>,
    pub fixtures: Vec<FixtureUse>,
    /// Structured module results not flattened into tables.
    pub details: BTreeMap<String, serde_json::Value>,
    pub notes: Vec<String>,
    pub wall_time_seconds: f64,
}

impl ResultRecord {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `result.json`, one CSV per table and any extra JSON files.
    pub fn write(&self, dir: &Path, extra: &[(String, serde_json::Value)]) -> Result<(), CliError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for table in &self.tables {
            let path = dir.join(format!("{}.csv", table.name));
            fs::write(&path, table.to_csv()).map_err(io(&path))?;
        }
        for (name, value) in extra {
            let path = dir.join(name);
            fs::write(&path, to_json(value)).map_err(io(&path))?;
        }
        let path = dir.join("result.json");
        fs::write(&path, to_json(&serde_json::to_value(self).expect("record serializes"))).map_err(io(&path))
    }
}

pub fn to_json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}
