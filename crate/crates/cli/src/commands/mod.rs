//! One function per command: read typed parameters, call the owning module, tabulate.

mod ball;
mod model1d;
mod surface;

use crate::error::CliError;
use crate::params::{CommandName, Parameters};
use crate::record::{FixtureSource, Table};
use robinspec_core::fixtures::{bundled, build_fixtures, FixtureFile};
use std::collections::BTreeMap;

/// Output of one command before it is wrapped into a record.
#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub details: BTreeMap<String, serde_json::Value>,
    /// Extra JSON files, e.g. `fit_report.json`.
    pub files: Vec<(String, serde_json::Value)>,
    pub notes: Vec<String>,
    pub fixtures: Option<FixtureSource>,
    /// Non-JSON artefacts (file name, contents).
    pub texts: Vec<(String, String)>,
}

impl Report {
    pub fn detail(&mut self, key: &str, value: impl serde::Serialize) {
        self.details
            .insert(key.into(), serde_json::to_value(value).expect("detail serializes"));
    }

    /// Opens the fixture file named by the `fixtures` parameter.
    pub fn fixtures(&mut self, p: &Parameters) -> Result<&mut FixtureSource, CliError> {
        if self.fixtures.is_none() {
            let path = p.text("fixtures");
            let source = if path.is_empty() {
                FixtureSource::new("bundled".into(), bundled())
            } else {
                let file = FixtureFile::load(std::path::Path::new(path))
                    .map_err(|e| CliError::Validation(format!("fixtures: {e}")))?;
                FixtureSource::new(path.into(), file)
            };
            self.fixtures = Some(source);
        }
        Ok(self.fixtures.as_mut().expect("just set"))
    }
}

pub fn dispatch(command: CommandName, p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    match command {
        CommandName::Montgomery => model1d::montgomery(p, report),
        CommandName::Degennes => model1d::degennes(p, report),
        CommandName::Robin1d => model1d::robin1d(p, report),
        CommandName::Harmonic => model1d::harmonic(p, report),
        CommandName::SurfaceScan => surface::surface_scan(p, report),
        CommandName::Effective2d => surface::effective2d(p, report),
        CommandName::Ball => ball::ball(p, report),
        CommandName::SphereModes => ball::sphere_modes(p, report),
        CommandName::Verify => ball::verify(p, report),
        CommandName::FixturesBuild => fixtures_build(p, report),
        CommandName::Sweep => unreachable!("sweeps are expanded by the caller"),
    }
}

fn fixtures_build(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    use crate::record::{Column, Provenance::Computed};
    let date = match p.text("date") {
        "today" => chrono::Local::now().format("%Y-%m-%d").to_string(),
        d => d.to_string(),
    };
    let file = build_fixtures(&date)?;
    let mut table = Table::new(
        "fixtures",
        vec![
            Column::new("name", "text", Computed),
            Column::new("value", "1", Computed),
            Column::new("extrapolation_order", "1", Computed),
            Column::new("oracle", "text", Computed),
            Column::new("grid", "text", Computed),
        ],
    );
    for (name, r) in &file.records {
        table.push(vec![
            name.as_str().into(),
            r.value.into(),
            r.extrapolation_order.into(),
            r.oracle.as_str().into(),
            r.grid.as_str().into(),
        ]);
    }
    report.tables.push(table);
    report.texts.push(("constants.toml".into(), file.to_toml()));
    report
        .notes
        .push("constants.toml is written to the output directory; copy it over fixtures/ to adopt it".into());
    Ok(())
}
