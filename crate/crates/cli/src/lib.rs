//! Command-line front end of the robinspec toolkit: typed configuration, dispatch to the
//! numerical modules, and persistence of results as JSON and CSV.

pub mod commands;
pub mod config;
pub mod error;
pub mod params;
pub mod record;
pub mod sweep;

use commands::{dispatch, Report};
use config::RunConfig;
use error::CliError;
use params::{CommandName, Parameters};
use record::{ErrorRecord, ResultRecord, Status};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

/// Environment variable bounding the sweep worker pool.
pub const WORKERS_ENV: &str = "ROBINSPEC_WORKERS";

#[derive(Debug)]
pub struct RunOutcome {
    pub record: ResultRecord,
    pub exit_code: i32,
}

/// Runs one command and writes its files into `dir`.
pub fn run_command(
    command: CommandName,
    raw: &BTreeMap<String, String>,
    parameters: &Parameters,
    seed: u64,
    dir: &Path,
) -> RunOutcome {
    let start = Instant::now();
    let mut report = Report::default();
    let result = dispatch(command, parameters, &mut report);
    let error = result.as_ref().err().map(ErrorRecord::from);
    let mut exit_code = result.as_ref().err().map_or(0, CliError::exit_code);
    let record = ResultRecord {
        toolkit: "robinspec".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.to_string(),
        seed,
        config: raw.clone(),
        parameters: serde_json::to_value(parameters).expect("parameters serialize"),
        status: if error.is_some() { Status::Error } else { Status::Ok },
        error,
        tables: if result.is_ok() { report.tables } else { vec![] },
        fixtures: report.fixtures.as_ref().map(|f| f.used()).unwrap_or_default(),
        details: report.details,
        notes: report.notes,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let files = if result.is_ok() { report.files } else { vec![] };
    let texts = if result.is_ok() { report.texts } else { vec![] };
    let written = record.write(dir, &files).and_then(|()| {
        texts.iter().try_for_each(|(name, text)| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })
        })
    });
    if let Err(e) = written {
        eprintln!("robinspec: {e}");
        exit_code = e.exit_code();
    }
    RunOutcome { record, exit_code }
}

/// Runs a validated configuration: a single command or a sweep.
pub fn run(config: &RunConfig) -> RunOutcome {
    match &config.sweep {
        Some(plan) => sweep::run_sweep(config, plan),
        None => run_command(config.command, &config.raw, &config.parameters, config.seed, &config.output),
    }
}
