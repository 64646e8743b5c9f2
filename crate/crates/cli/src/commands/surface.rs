use super::Report;
use crate::error::CliError;
use crate::params::{Parameters, SurfaceSpec};
use crate::record::{Column, Provenance::*, Summary, Table};
use robinspec_core::effective2d::{
    assemble_coefficients, build_chart, effective_assembly, effective_spectrum, variational_upper_bound, ChartSpec,
    VectorPotential,
};
use robinspec_core::geometry::{
    c0_from_minimum, c_star_bound, effective_energy_with, predict_eigenvalues, EnergyOptions, Ellipsoid,
    MagneticField, ParamSurface, PlanePatch, Point3, TabulatedSurface,
};
use std::sync::Arc;

pub(crate) fn build_surface(spec: &SurfaceSpec) -> Result<Arc<dyn ParamSurface>, CliError> {
    Ok(match spec {
        SurfaceSpec::Sphere { radius } => Arc::new(Ellipsoid::sphere(*radius)),
        SurfaceSpec::Ellipsoid { axes: [a, b, c] } => Arc::new(Ellipsoid::new(*a, *b, *c)),
        SurfaceSpec::Plane { half_width } => Arc::new(PlanePatch {
            half_width: *half_width,
        }),
        SurfaceSpec::Tabulated { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("surface file {path}: {e}")))?;
            let surface =
                TabulatedSurface::parse(&text).map_err(|e| CliError::Validation(format!("surface file {path}: {e}")))?;
            Arc::new(surface)
        }
    })
}

fn field(p: &Parameters) -> MagneticField {
    let [x, y, z] = p.vector("b_field");
    MagneticField::uniform(x, y, z)
}

pub fn surface_scan(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    let surface = build_surface(p.surface("surface"))?;
    let field = field(p);
    let (gamma, sigma) = (p.real("gamma"), p.real("sigma"));
    let nu0 = report.fixtures(p)?.value("montgomery_nu0")?;
    let n = p.count("scan_cells");
    let options = EnergyOptions {
        scan: [n, 2 * n],
        ..EnergyOptions::default()
    };
    let energy = effective_energy_with(surface.as_ref(), &field, gamma, sigma, &options)?;
    // c₀ is undefined at degenerate minima; that is reported, not fatal.
    let c0 = match c0_from_minimum(&energy) {
        Ok(v) => Some(v),
        Err(e) => {
            report.notes.push(format!("c0 unavailable: {e}"));
            None
        }
    };
    let c_star = c_star_bound(surface.as_ref());
    let prediction = predict_eigenvalues(surface.as_ref(), &field, gamma, sigma, p.count("level"), nu0);

    let [x, y, z] = energy.minimizer.x;
    let mut s = Summary::default();
    s.computed("energy", energy.value)
        .add("x", "length", Computed, x)
        .add("y", "length", Computed, y)
        .add("z", "length", Computed, z)
        .computed("field_normal", energy.field_normal)
        .computed("degenerate", energy.degenerate)
        .computed("wells", energy.wells)
        .add("level_set_diameter", "length", Computed, energy.level_set_diameter)
        .computed("hessian_11", energy.hessian[(0, 0)])
        .computed("hessian_12", energy.hessian[(0, 1)])
        .computed("hessian_22", energy.hessian[(1, 1)])
        .computed("c0", c0)
        .computed("c_star_bound", c_star)
        .fixture("nu0_fixture", nu0);
    report.tables.push(s.into_table());

    let mut t = Table::new(
        "predictions",
        vec![
            Column::new("source", "text", Computed),
            Column::new("applicable", "text", Computed),
            Column::new("term", "text", Computed),
            Column::new("value", "1", Computed),
        ],
    );
    for e in &prediction.expansions {
        let source = serde_json::to_value(e.source).expect("source serializes");
        let source = source.as_str().unwrap_or_default().to_string();
        for term in &e.terms {
            t.push(vec![
                source.as_str().into(),
                e.applicable.into(),
                term.label.as_str().into(),
                term.value.into(),
            ]);
        }
    }
    report.tables.push(t);
    report.detail("minimum", &energy);
    report.detail("predictions", &prediction);
    Ok(())
}

pub fn effective2d(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    let surface = build_surface(p.surface("surface"))?;
    let b = Point3::from(p.vector("b_field"));
    let field = MagneticField::uniform(b.x, b.y, b.z);
    let potential = VectorPotential::symmetric(b);
    let center = Point3::from(p.vector("center"));
    let h = p.real("h");
    let (hw, cells) = (p.real("half_width"), p.count("cells"));
    let spec = ChartSpec {
        half_widths: [hw, hw],
        cells: [cells, cells],
        delta: p.auto_real("delta"),
        ..ChartSpec::default()
    };
    let chart = build_chart(surface.clone(), &center, &potential, &field, h, &spec)?;
    let coeffs = assemble_coefficients(&chart)?;
    let assembly = effective_assembly(&coeffs, &chart)?;
    let spectrum = effective_spectrum(&coeffs, &chart, p.count("k"))?;
    let trial = if p.flag("trial") {
        Some(variational_upper_bound(
            surface.as_ref(),
            &potential,
            &field,
            &center,
            h,
            p.real("sigma"),
            p.real("rho"),
        )?)
    } else {
        None
    };

    let mut s = Summary::default();
    s.computed("lowest", spectrum.ground())
        .computed("lower_bound", assembly.lower_bound)
        .computed("hermitian_defect", assembly.hermitian_defect)
        .computed("unknowns", assembly.unknowns)
        .add("delta", "length", Computed, chart.delta())
        .computed("trial_value", trial.as_ref().map(|t| t.value));
    report.tables.push(s.into_table());

    let mut t = Table::new(
        "spectrum",
        vec![
            Column::new("n", "1", Input),
            Column::new("eigenvalue", "1", Computed),
            Column::new("residual", "1", Computed),
        ],
    );
    for (n, (v, r)) in spectrum.eigenvalues.iter().zip(&spectrum.residuals).enumerate() {
        t.push(vec![(n + 1).into(), (*v).into(), (*r).into()]);
    }
    report.tables.push(t);

    if p.flag("coefficients_table") {
        let names = [
            "alpha_11", "alpha_12", "alpha_22", "beta_hat_1", "beta_hat_2", "gamma_sum", "mu", "rho",
        ];
        let mut columns = vec![
            Column::new("y1", "length", Computed),
            Column::new("y2", "length", Computed),
        ];
        columns.extend(names.iter().map(|n| Column::new(n, "1", Computed)));
        let mut t = Table::new("coefficients", columns);
        for j in 0..=cells {
            for i in 0..=cells {
                let v = coeffs.index(i, j);
                let [y1, y2] = chart.coordinate(i, j);
                let a = &coeffs.alpha[v];
                let bh = coeffs.beta_hat(v);
                t.push(vec![
                    y1.into(),
                    y2.into(),
                    a[(0, 0)].into(),
                    a[(0, 1)].into(),
                    a[(1, 1)].into(),
                    bh[0].into(),
                    bh[1].into(),
                    coeffs.gamma[v].sum().into(),
                    coeffs.mu[v].into(),
                    coeffs.rho[v].into(),
                ]);
            }
        }
        report.tables.push(t);
    }
    report.detail("solver", &spectrum.meta);
    if let Some(trial) = trial {
        report.detail("trial", trial);
    }
    Ok(())
}
