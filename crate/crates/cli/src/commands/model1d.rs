use super::Report;
use crate::error::CliError;
use crate::params::Parameters;
use crate::record::{Column, Provenance::*, Summary, Table};
use robinspec_core::model1d::{
    degennes_lambda, degennes_theta0_on, harmonic_ground, montgomery_lambda, montgomery_min_on,
    robin_transverse_expansion, DeGennesGrid, MontgomeryGrid,
};

fn scan_table(name: &str, axis: &str, values: impl Iterator<Item = (f64, f64)>) -> Table {
    let mut t = Table::new(
        name,
        vec![Column::new(axis, "1", Input), Column::new("lambda", "1", Computed)],
    );
    for (x, v) in values {
        t.push(vec![x.into(), v.into()]);
    }
    t
}

pub fn montgomery(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    let grid = MontgomeryGrid {
        half_width: p.real("half_width"),
        cells: p.count("cells"),
    };
    let fixtures = report.fixtures(p)?;
    let (nu0_fixture, zeta0_fixture) = (fixtures.value("montgomery_nu0")?, fixtures.value("montgomery_zeta0")?);
    let min = montgomery_min_on(grid)?;
    let scan = p
        .list("zeta_range")
        .iter()
        .map(|&z| montgomery_lambda(z, grid.half_width, grid.cells).map(|v| (z, v)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut s = Summary::default();
    s.computed("nu0", min.nu0)
        .computed("zeta0", min.zeta0)
        .fixture("nu0_fixture", nu0_fixture)
        .fixture("zeta0_fixture", zeta0_fixture);
    report.tables.push(s.into_table());
    report.tables.push(scan_table("lambda_scan", "zeta", scan.into_iter()));
    report.detail("minimum", min);
    Ok(())
}

pub fn degennes(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    let grid = DeGennesGrid {
        length: p.real("length"),
        spacing: p.real("spacing"),
    };
    if grid.length / grid.spacing < 16.0 {
        return Err(CliError::Validation("degennes: need at least 16 cells (length / spacing)".into()));
    }
    let fixtures = report.fixtures(p)?;
    let (theta_fixture, xi_fixture) = (fixtures.value("degennes_theta0")?, fixtures.value("degennes_xi0")?);
    let min = degennes_theta0_on(grid)?;
    let scan = p
        .list("xi_range")
        .iter()
        .map(|&x| degennes_lambda(x, grid).map(|v| (x, v)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut s = Summary::default();
    s.computed("theta0", min.theta0)
        .computed("xi_min", min.xi_min)
        .fixture("theta0_fixture", theta_fixture)
        .fixture("xi0_fixture", xi_fixture);
    report.tables.push(s.into_table());
    report.tables.push(scan_table("lambda_scan", "xi", scan.into_iter()));
    report.detail("minimum", min);
    Ok(())
}

pub fn robin1d(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    let (kappa, c_star, sigma, rho) = (p.real("kappa"), p.real("c_star"), p.real("sigma"), p.real("rho"));
    let fit = robin_transverse_expansion(kappa, c_star, sigma, p.list("h_list"), rho)?;
    let mut s = Summary::default();
    s.computed("leading", fit.coefficients[0])
        .computed("subleading", fit.coefficients[1])
        .computed("third", fit.coefficients[2])
        .computed("residual", fit.residual)
        .computed("condition", fit.condition);
    report.tables.push(s.into_table());
    report.tables.push(coefficient_table(&fit.exponents, &fit.coefficients, None));
    report.tables.push(sample_table(&fit));
    report.files.push((
        "fit_report.json".into(),
        serde_json::json!({
            "model": "robin_transverse_expansion",
            "kappa": kappa,
            "c_star": c_star,
            "sigma": sigma,
            "rho": rho,
            "fit": fit,
        }),
    ));
    Ok(())
}

pub(crate) fn coefficient_table(exponents: &[f64], fitted: &[f64], expected: Option<&[f64]>) -> Table {
    let mut columns = vec![
        Column::new("exponent", "1", Computed),
        Column::new("coefficient", "1", Computed),
    ];
    if expected.is_some() {
        columns.push(Column::new("expected", "1", Computed));
    }
    let mut t = Table::new("coefficients", columns);
    for (i, (e, c)) in exponents.iter().zip(fitted).enumerate() {
        let mut row = vec![(*e).into(), (*c).into()];
        if let Some(x) = expected {
            row.push(x[i].into());
        }
        t.push(row);
    }
    t
}

pub(crate) fn sample_table(fit: &robinspec_core::asymfit::FitReport) -> Table {
    let mut t = Table::new(
        "samples",
        vec![
            Column::new("h", "1", Input),
            Column::new("energy", "1", Computed),
            Column::new("fitted", "1", Computed),
        ],
    );
    for &(h, v) in &fit.samples {
        t.push(vec![h.into(), v.into(), fit.evaluate(h).into()]);
    }
    t
}

pub fn harmonic(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    let (h, m, xi, eta) = (p.real("h"), p.real("m"), p.real("xi"), p.real("eta"));
    // auto: twelve well widths, the module asks for at least eight
    let (half_width, source) = match p.auto_real("half_width") {
        Some(v) => (v, Input),
        None if eta == 0.0 => (1.0, Computed),
        None => (12.0 * (h / eta.abs()).sqrt(), Computed),
    };
    let g = harmonic_ground(h, m, xi, eta, half_width, p.count("cells"))?;
    let mut s = Summary::default();
    s.computed("lambda", g.value)
        .computed("degenerate_well", g.degenerate_well)
        .add("half_width", "length", source, half_width);
    report.tables.push(s.into_table());
    Ok(())
}
