//! Run configuration: flat key/value files merged with command-line values.

use crate::error::CliError;
use crate::params::{range_values, specs, validate, CommandName, Parameters};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Keys of a config file that are not command parameters.
const RESERVED: [&str; 3] = ["command", "output", "seed"];

/// Flat contents of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub command: Option<CommandName>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub values: BTreeMap<String, String>,
}

fn scalar(key: &str, value: &toml::Value) -> Result<String, CliError> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| match v {
                toml::Value::Array(_) | toml::Value::Table(_) => {
                    Err(CliError::Validation(format!("{key}: nested arrays are not allowed")))
                }
                other => scalar(key, other),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        _ => return Err(CliError::Validation(format!("{key}: tables are not allowed in a flat config"))),
    })
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Validation(format!("config file: {e}")))?;
        let mut out = ConfigFile::default();
        for (key, value) in &table {
            let text = scalar(key, value)?;
            match key.as_str() {
                "command" => out.command = Some(text.parse()?),
                "output" => out.output = Some(PathBuf::from(text)),
                "seed" => {
                    out.seed = Some(
                        text.parse()
                            .map_err(|_| CliError::Validation(format!("seed: '{text}' is not a non-negative integer")))?,
                    )
                }
                _ => {
                    out.values.insert(key.clone(), text);
                }
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// One axis of a sweep grid: a parameter key and its values as text.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<String>,
}

/// A validated sweep: every cell's parameters were checked before any computation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub target: CommandName,
    pub axes: Vec<GridAxis>,
    pub base: BTreeMap<String, String>,
    /// Raw and validated parameters per cell, in grid order (last axis fastest).
    pub cells: Vec<(BTreeMap<String, String>, Parameters)>,
}

/// Parses `key=v1,v2;key2=a:b:step` into axes.
pub fn parse_grid(text: &str) -> Result<Vec<GridAxis>, CliError> {
    let mut axes: Vec<GridAxis> = vec![];
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("grid: expected key=values, got '{part}'")))?;
        let key = key.trim().to_string();
        if axes.iter().any(|a| a.key == key) {
            return Err(CliError::Validation(format!("grid: axis '{key}' given twice")));
        }
        let values: Vec<String> = if values.contains(':') && !values.contains('{') {
            range_values(&key, values)?.into_iter().map(|v| v.to_string()).collect()
        } else {
            split_values(values)
        };
        if values.is_empty() {
            return Err(CliError::Validation(format!("grid: axis '{key}' has no values")));
        }
        axes.push(GridAxis { key, values });
    }
    if axes.is_empty() {
        return Err(CliError::Validation("grid: empty parameter grid".into()));
    }
    Ok(axes)
}

/// Splits on commas outside braces, so `surface=sphere{1},ellipsoid{1,2,3}` works.
fn split_values(text: &str) -> Vec<String> {
    let mut out = vec![];
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    out.push(current);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

impl SweepPlan {
    fn build(raw: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let own: Vec<&str> = specs(CommandName::Sweep).iter().map(|s| s.key).collect();
        let (mine, base): (BTreeMap<_, _>, BTreeMap<_, _>) =
            raw.clone().into_iter().partition(|(k, _)| own.contains(&k.as_str()));
        let params = validate(CommandName::Sweep, &mine)?;
        let target: CommandName = params.text("target").parse()?;
        let axes = parse_grid(params.text("grid"))?;
        for axis in &axes {
            if base.contains_key(&axis.key) {
                return Err(CliError::Validation(format!(
                    "grid axis '{}' is also set as a fixed parameter",
                    axis.key
                )));
            }
        }
        let total: usize = axes.iter().map(|a| a.values.len()).product();
        let mut cells = Vec::with_capacity(total);
        for index in 0..total {
            let mut values = base.clone();
            let mut rest = index;
            for axis in axes.iter().rev() {
                let n = axis.values.len();
                values.insert(axis.key.clone(), axis.values[rest % n].clone());
                rest /= n;
            }
            let parameters = validate(target, &values)
                .map_err(|e| CliError::Validation(format!("sweep cell {index}: {e}")))?;
            cells.push((values, parameters));
        }
        Ok(SweepPlan {
            target,
            axes,
            base,
            cells,
        })
    }

    /// Axis values of one cell, in axis order.
    pub fn coordinates(&self, index: usize) -> Vec<&str> {
        self.axes
            .iter()
            .map(|a| self.cells[index].0[&a.key].as_str())
            .collect()
    }
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandName,
    /// Keys as supplied, for the record.
    pub raw: BTreeMap<String, String>,
    pub parameters: Parameters,
    pub sweep: Option<SweepPlan>,
    pub output: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    /// Validates `raw` for `command`; nothing is computed here.
    pub fn new(command: CommandName, raw: BTreeMap<String, String>, output: PathBuf, seed: u64) -> Result<Self, CliError> {
        for key in RESERVED {
            if raw.contains_key(key) {
                return Err(CliError::Validation(format!("'{key}' is not a parameter")));
            }
        }
        let (parameters, sweep) = if command == CommandName::Sweep {
            let plan = SweepPlan::build(&raw)?;
            let own: BTreeMap<String, String> = raw
                .iter()
                .filter(|(k, _)| specs(CommandName::Sweep).iter().any(|s| s.key == k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            (validate(command, &own)?, Some(plan))
        } else {
            (validate(command, &raw)?, None)
        };
        Ok(Self {
            command,
            raw,
            parameters,
            sweep,
            output,
            seed,
        })
    }

    /// Merges a config file with command-line values (which win).
    pub fn from_sources(
        command: Option<CommandName>,
        file: Option<&Path>,
        flags: BTreeMap<String, String>,
        output: Option<PathBuf>,
        seed: Option<u64>,
    ) -> Result<Self, CliError> {
        let file = match file {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let command = match (command, file.command) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Validation(format!(
                    "command '{a}' conflicts with '{b}' in the config file"
                )))
            }
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => return Err(CliError::Validation("no command given".into())),
        };
        let mut raw = file.values;
        raw.extend(flags);
        let output = output
            .or(file.output)
            .unwrap_or_else(|| PathBuf::from(format!("robinspec-out/{command}")));
        Self::new(command, raw, output, seed.or(file.seed).unwrap_or(0))
    }
}
