use super::model1d::{coefficient_table, sample_table};
use super::Report;
use crate::error::CliError;
use crate::params::Parameters;
use crate::record::{Column, Provenance::*, Summary, Table};
use robinspec_core::ball::{
    ball_ground, ball_trial_upper_bound, mode_curves, verify_regime, AngularProblem, BallGrid, BallProblem, Regime,
};
use robinspec_core::model1d::MontgomeryMinimum;

fn regime(p: &Parameters) -> Regime {
    match p.text("regime") {
        "critical" => Regime::Critical,
        _ => Regime::HBounded,
    }
}

pub fn ball(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    let regime = regime(p);
    let (h, b) = (p.real("h"), p.real("b"));
    let trial_montgomery = if p.flag("trial") && regime == Regime::Critical {
        let f = report.fixtures(p)?;
        Some(MontgomeryMinimum {
            nu0: f.value("montgomery_nu0")?,
            zeta0: f.value("montgomery_zeta0")?,
        })
    } else {
        if p.flag("trial") {
            report.notes.push("the trial state is defined for the critical regime only".into());
        }
        None
    };
    let mut problem = BallProblem::new(regime, h, b)?;
    if let Some(theta_cells) = p.auto_count("theta_cells") {
        problem = problem.with_grid(BallGrid {
            theta_cells,
            ..BallGrid::for_regime(regime)
        })?;
    }
    let ground = ball_ground(&problem)?;
    let trial = trial_montgomery
        .map(|m| ball_trial_upper_bound(h, b, &m))
        .transpose()?;

    let mut s = Summary::default();
    s.computed("energy", ground.energy)
        .computed("m_star", ground.m_star)
        .computed("window_lo", ground.window.0)
        .computed("window_hi", ground.window.1)
        .computed("margin", ground.margin)
        .add("inner_radius", "length", Computed, ground.inner_radius)
        .computed("residual", ground.residual)
        .computed("trial_value", trial.as_ref().map(|t| t.value))
        .computed("trial_m", trial.as_ref().map_or(crate::record::Cell::Missing, |t| t.m.into()));
    report.tables.push(s.into_table());

    let mut t = Table::new(
        "modes",
        vec![Column::new("m", "1", Computed), Column::new("energy", "1", Computed)],
    );
    for &(m, e) in &ground.table {
        t.push(vec![m.into(), e.into()]);
    }
    report.tables.push(t);
    report.detail("grid", &ground.grid);
    if let Some(trial) = trial {
        report.detail("trial", trial);
    }
    Ok(())
}

pub fn sphere_modes(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    let bs = p.list("b_range");
    let problem = AngularProblem::new(p.count("theta_cells"))?;
    let envelope = bs
        .iter()
        .map(|&b| problem.effective_energy(b).map(|(e, m)| (b, e, m)))
        .collect::<Result<Vec<_>, _>>()?;
    let (lo, hi) = match p.window("m_window") {
        Some(w) => w,
        None => {
            let ms = envelope.iter().map(|e| e.2);
            (ms.clone().min().unwrap_or(0) - 1, ms.max().unwrap_or(0) + 1)
        }
    };
    let modes: Vec<i64> = (lo..=hi).collect();
    let curves = mode_curves(&modes, bs, p.count("theta_cells"))?;

    let mut t = Table::new(
        "mode_curves",
        vec![
            Column::new("b_or_h", "1", Input),
            Column::new("m", "1", Input),
            Column::new("lambda", "1", Computed),
        ],
    );
    for c in &curves {
        for (b, v) in c.parameters.iter().zip(&c.values) {
            t.push(vec![(*b).into(), c.m.into(), (*v).into()]);
        }
    }
    let mut e = Table::new(
        "e_of_b",
        vec![
            Column::new("b", "1", Input),
            Column::new("e", "1", Computed),
            Column::new("m_star", "1", Computed),
        ],
    );
    for &(b, v, m) in &envelope {
        e.push(vec![b.into(), v.into(), m.into()]);
    }
    let mut s = Summary::default();
    s.input("points", bs.len()).computed("m_lo", lo).computed("m_hi", hi);
    report.tables.push(s.into_table());
    report.tables.push(t);
    report.tables.push(e);
    Ok(())
}

pub fn verify(p: &Parameters, report: &mut Report) -> Result<(), CliError> {
    let regime = regime(p);
    let b = p.real("b");
    let nu0 = report.fixtures(p)?.value("montgomery_nu0")?;
    let v = verify_regime(regime, b, p.list("h_list"), nu0)?;
    let mut s = Summary::default();
    for (k, name) in ["leading", "middle", "third"].into_iter().enumerate() {
        s.computed(name, v.fit.coefficients[k]);
        s.computed(&format!("{name}_expected"), v.expected[k]);
    }
    s.computed("middle_sign", v.middle_sign)
        .computed("residual", v.fit.residual)
        .computed("condition", v.fit.condition)
        .fixture("nu0_fixture", nu0);
    report.tables.push(s.into_table());
    report
        .tables
        .push(coefficient_table(&v.fit.exponents, &v.fit.coefficients, Some(&v.expected)));
    let mut samples = sample_table(&v.fit);
    samples.columns.push(Column::new("m_star", "1", Computed));
    samples.columns.push(Column::new("residual", "1", Computed));
    for (row, g) in samples.rows.iter_mut().zip(sorted_grounds(&v.grounds, &v.fit.samples)) {
        row.push(g.m_star.into());
        row.push(g.residual.into());
    }
    report.tables.push(samples);
    report.files.push((
        "fit_report.json".into(),
        serde_json::json!({
            "regime": v.regime,
            "b": v.b,
            "fit": v.fit,
            "expected": v.expected,
            "middle_sign": v.middle_sign,
            "nu0_fixture": nu0,
            "grids": v.grounds.iter().map(|g| serde_json::json!({
                "h": g.h, "grid": g.grid, "window": g.window, "margin": g.margin, "residual": g.residual,
            })).collect::<Vec<_>>(),
        }),
    ));
    Ok(())
}

/// Grounds in the order of the fit samples (which are sorted by h).
fn sorted_grounds<'a>(
    grounds: &'a [robinspec_core::ball::BallGround],
    samples: &[(f64, f64)],
) -> Vec<&'a robinspec_core::ball::BallGround> {
    samples
        .iter()
        .map(|(h, _)| {
            grounds
                .iter()
                .find(|g| g.h == *h)
                .expect("every fit sample comes from a ground state")
        })
        .collect()
}
