//! Parameter sweeps on a bounded worker pool.

use crate::config::{RunConfig, SweepPlan};
use crate::error::CliError;
use crate::record::{Cell, Column, ErrorRecord, Provenance, ResultRecord, Status, Table};
use crate::{run_command, RunOutcome, WORKERS_ENV};
use rayon::prelude::*;
use std::path::PathBuf;
use std::time::Instant;

/// Worker count from the environment, or the available parallelism.
pub fn workers() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Validation(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, usize::from)),
    }
}

pub fn cell_dir(index: usize) -> String {
    format!("cell-{index:04}")
}

fn aggregate(plan: &SweepPlan, outcomes: &[RunOutcome]) -> Table {
    let mut columns = vec![Column::new("index", "1", Provenance::Input)];
    for axis in &plan.axes {
        columns.push(Column::new(&axis.key, "1", Provenance::Input));
    }
    columns.push(Column::new("status", "text", Provenance::Computed));
    columns.push(Column::new("error", "text", Provenance::Computed));
    let fixed = columns.len();
    for o in outcomes {
        if let Some(summary) = o.record.table("summary") {
            for c in &summary.columns {
                if !columns[fixed..].iter().any(|k| k.name == c.name) {
                    columns.push(c.clone());
                }
            }
        }
    }
    let mut table = Table::new("sweep", columns.clone());
    for (index, o) in outcomes.iter().enumerate() {
        let mut row: Vec<Cell> = vec![index.into()];
        row.extend(plan.coordinates(index).into_iter().map(|v| match v.parse::<f64>() {
            Ok(x) => Cell::Number(x),
            Err(_) => Cell::Text(v.into()),
        }));
        let ok = o.record.status == Status::Ok && o.exit_code == 0;
        row.push(if ok { "ok" } else { "error" }.into());
        row.push(o.record.error.as_ref().map_or(Cell::Missing, |e| e.message.clone().into()));
        let summary = o.record.table("summary");
        for c in &columns[fixed..] {
            let value = summary
                .and_then(|s| s.column(&c.name).map(|i| s.rows[0][i].clone()))
                .unwrap_or(Cell::Missing);
            row.push(value);
        }
        table.push(row);
    }
    table
}

/// Runs every grid cell, then writes the aggregate once.
pub fn run_sweep(config: &RunConfig, plan: &SweepPlan) -> RunOutcome {
    let start = Instant::now();
    let base_record = |status, error: Option<ErrorRecord>| ResultRecord {
        toolkit: "robinspec".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: config.command.to_string(),
        seed: config.seed,
        config: config.raw.clone(),
        parameters: serde_json::to_value(&config.parameters).expect("parameters serialize"),
        status,
        error,
        tables: vec![],
        fixtures: vec![],
        details: Default::default(),
        notes: vec![],
        wall_time_seconds: 0.0,
    };
    let pool = workers().and_then(|n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("worker pool: {e}")))
    });
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("robinspec: {e}");
            return RunOutcome {
                exit_code: e.exit_code(),
                record: base_record(Status::Error, Some(ErrorRecord::from(&e))),
            };
        }
    };
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        plan.cells
            .par_iter()
            .enumerate()
            .map(|(index, (raw, parameters))| {
                let dir: PathBuf = config.output.join(cell_dir(index));
                run_command(plan.target, raw, parameters, config.seed, &dir)
            })
            .collect()
    });

    let failed = outcomes.iter().filter(|o| o.exit_code != 0).count();
    let all_failed = failed == outcomes.len();
    let error = all_failed.then(|| ErrorRecord {
        kind: "SweepFailed".into(),
        message: format!("all {failed} sweep cells failed"),
        solver_failure: outcomes
            .iter()
            .all(|o| o.record.error.as_ref().is_some_and(|e| e.solver_failure)),
        detail: String::new(),
    });
    let mut record = base_record(if all_failed { Status::Error } else { Status::Ok }, error);
    record.tables.push(aggregate(plan, &outcomes));
    record.details.insert(
        "cells".into(),
        serde_json::json!(outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| serde_json::json!({
                "index": i,
                "directory": cell_dir(i),
                "exit_code": o.exit_code,
            }))
            .collect::<Vec<_>>()),
    );
    record.notes.push(format!(
        "{} cells, {failed} failed",
        outcomes.len()
    ));
    record.wall_time_seconds = start.elapsed().as_secs_f64();
    let mut exit_code = if all_failed { 3 } else { 0 };
    if let Err(e) = record.write(&config.output, &[]) {
        eprintln!("robinspec: {e}");
        exit_code = e.exit_code();
    }
    RunOutcome { record, exit_code }
}
