use nalgebra::DMatrix;
use proptest::prelude::*;
use robinspec_core::ball::*;
use robinspec_core::fixtures::{bundled, oracle};
use robinspec_core::model1d::MontgomeryMinimum;
use robinspec_core::Error;

fn montgomery() -> MontgomeryMinimum {
    let f = bundled();
    MontgomeryMinimum {
        nu0: f.get("montgomery_nu0").unwrap(),
        zeta0: f.get("montgomery_zeta0").unwrap(),
    }
}

fn light(regime: Regime, h: f64, b: f64) -> BallProblem {
    BallProblem::new(regime, h, b)
        .unwrap()
        .with_grid(BallGrid {
            radial_cells: 600,
            first_cell: 1e-2,
            radial_modes: Some(4),
            theta_cells: 192,
        })
        .unwrap()
}

/// Lowest generalized eigenvalue by Cholesky reduction and a dense symmetric solve.
fn dense_ground(a: DMatrix<f64>, m: DMatrix<f64>) -> f64 {
    let l = m.cholesky().expect("mass is SPD").l();
    let li = l.clone().try_inverse().unwrap();
    let c = &li * a * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    c.symmetric_eigen().eigenvalues.min()
}

#[test]
fn zero_mode_angular_energy_is_quadratic() {
    assert!((lambda_m(0, 2.0, 256).unwrap() - 1.0).abs() < 1e-6);
    assert!(lambda_m(0, 0.0, 256).unwrap().abs() < 1e-12);
}

#[test]
fn first_mode_matches_fixture_and_oracle() {
    let fixture = bundled().get("lambda_1_b2").unwrap();
    let v = lambda_m(1, 2.0, DEFAULT_THETA_CELLS).unwrap();
    assert!((v - fixture).abs() < 1e-6 * fixture, "{v} vs {fixture}");
    let fv = oracle::lambda_m(1, 2.0).unwrap();
    assert!((v - fv.limit).abs() < 1e-6 * fv.limit);
}

#[test]
fn effective_energy_at_two_prefers_first_mode() {
    let (v, m) = e_of_b(2.0).unwrap();
    assert_eq!(m, 1);
    assert!(v <= 1.0);
    let (zero, m0) = e_of_b(0.0).unwrap();
    assert!(zero.abs() < 1e-10);
    assert_eq!(m0, 0);
}

#[test]
fn effective_energy_is_not_monotone() {
    let a = AngularProblem::new(512).unwrap();
    let values: Vec<f64> = (0..=120)
        .map(|i| a.effective_energy(0.1 * i as f64).unwrap().0)
        .collect();
    assert!(values.iter().all(|v| *v >= -1e-10));
    assert!(values.windows(2).any(|w| w[1] < w[0]));
}

#[test]
fn mode_curves_are_symmetric_at_zero_field() {
    let curves = mode_curves(&[-3, 3], &[0.0], 256).unwrap();
    assert!((curves[0].values[0] - curves[1].values[0]).abs() < 1e-9);
    let p = light(Regime::Critical, 0.05, 0.0);
    let a = ball_mode_spectrum(&p, 4, 1).unwrap().eigenvalues[0];
    let b = ball_mode_spectrum(&p, -4, 1).unwrap().eigenvalues[0];
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn robin_ball_without_field() {
    let h = 0.02;
    let p = BallProblem::critical(h, 0.0).unwrap();
    let e = ball_mode_spectrum(&p, 0, 1).unwrap().eigenvalues[0];
    // the radial ground state is −(1 + h)² up to exponentially small terms
    assert!((e + (1.0 + h) * (1.0 + h)).abs() < 1e-6, "{e}");
    let g = ball_ground(&p).unwrap();
    assert_eq!(g.m_star, 0);
    assert!((g.energy - e).abs() < 1e-12);
}

#[test]
fn critical_ground_lies_in_bracket() {
    let h = 0.02;
    let nu0 = montgomery().nu0;
    let g = ball_ground(&BallProblem::critical(h, 1.0).unwrap()).unwrap();
    let base = -1.0 - 2.0 * h;
    assert!(g.energy >= base && g.energy <= base + 2.0 * nu0 * h.powf(4.0 / 3.0), "{}", g.energy);
    assert!(g.window.0 < g.m_star && g.m_star < g.window.1);
}

#[test]
fn reduced_mode_matches_dense_oracle() {
    let p = BallProblem::critical(0.02, 1.0)
        .unwrap()
        .with_grid(BallGrid {
            radial_cells: 1500,
            first_cell: 1e-3,
            radial_modes: Some(6),
            theta_cells: 256,
        })
        .unwrap();
    let (pair, _) = ball_mode_pair(&p, 23).unwrap();
    assert!(pair.n() <= 3000);
    let sparse = ball_mode_spectrum(&p, 23, 1).unwrap().eigenvalues[0];
    let dense = dense_ground(pair.stiffness().to_dense(), pair.mass().to_dense());
    assert!((sparse - dense).abs() < 1e-6 * dense.abs(), "{sparse} vs {dense}");
}

#[test]
fn nested_refinement_is_monotone() {
    // θ cells tripled keeps the cell-centred nodes; radial cells doubled with the
    // first cell halved keeps the graded nodes.
    let mut values = Vec::new();
    for (nr, nt, fc) in [(24, 12, 0.08), (48, 36, 0.04), (96, 108, 0.02)] {
        let p = BallProblem::critical(0.08, 1.0)
            .unwrap()
            .with_grid(BallGrid {
                radial_cells: nr,
                first_cell: fc,
                radial_modes: None,
                theta_cells: nt,
            })
            .unwrap();
        values.push(ball_mode_spectrum(&p, 4, 2).unwrap().eigenvalues);
    }
    for w in values.windows(2) {
        for (coarse, fine) in w[0].iter().zip(&w[1]) {
            assert!(fine <= &(coarse + 1e-12), "{fine} > {coarse}");
        }
    }
}

#[test]
fn diamagnetic_sandwich_on_light_grid() {
    for regime in [Regime::Critical, Regime::HBounded] {
        let zero = ball_ground(&light(regime, 0.05, 0.0)).unwrap();
        for b in [0.5, 1.0, 2.0] {
            let p = light(regime, 0.05, b);
            let g = ball_ground(&p).unwrap();
            let tol = 10.0 * g.residual.max(zero.residual);
            assert!(g.energy >= zero.energy - tol, "{regime:?} b={b}");
            assert!(g.energy <= zero.energy + p.potential_sup() + tol, "{regime:?} b={b}");
        }
    }
}

#[test]
fn trial_state_dominates_ground() {
    let h = 0.04;
    let t = ball_trial_upper_bound(h, 1.0, &montgomery()).unwrap();
    let g = ball_ground(&BallProblem::critical(h, 1.0).unwrap()).unwrap();
    assert!(t.value >= g.energy, "{} < {}", t.value, g.energy);
    assert!(!t.small_field);
}

#[test]
fn trial_state_survives_vanishing_field() {
    for b in [0.0, 1e-4] {
        let t = ball_trial_upper_bound(0.04, b, &montgomery()).unwrap();
        assert!(t.value.is_finite());
        assert!(t.small_field);
        assert_eq!(t.m, 0);
    }
}

#[test]
fn verification_rejects_bad_sweeps() {
    let err = verify_regime(Regime::Critical, 1.0, &[0.01, 0.02, 0.04], 0.57).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
}

#[test]
fn window_cap_reports_table() {
    let p = light(Regime::Critical, 0.05, 1.0);
    let err = ball_ground_with(
        &p,
        WindowPolicy {
            margin: Some(10.0),
            max_modes: 12,
        },
    )
    .unwrap_err();
    match err {
        Error::WindowExhausted { table } => assert!(table.len() >= 9),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn problem_validation() {
    assert!(BallProblem::critical(1.5, 1.0).is_err());
    assert!(BallProblem::critical(0.1, -1.0).is_err());
    assert!(lambda_m(1, 1.0, 16).is_err());
    let p = BallProblem::critical(0.02, 1.0).unwrap();
    let r = p.inner_radius();
    assert!(r > 0.0 && r < 1.0);
    assert_eq!(p.boundary_exponent(), 1.0);
    assert_eq!(BallProblem::h_bounded(0.02, 1.0).unwrap().boundary_exponent(), 1.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn angular_energy_respects_pointwise_bound(m in -6i64..6, b in 0.0f64..8.0) {
        let v = lambda_m(m, b, 128).unwrap();
        let mf = m as f64;
        let bound = if m >= 0 { (mf - 0.5 * b).max(0.0).powi(2) } else { (-mf + 0.5 * b).powi(2) };
        prop_assert!(v >= bound - 1e-9);
    }

    #[test]
    fn angular_energy_symmetric_without_field(m in 0i64..8) {
        let a = lambda_m(m, 0.0, 128).unwrap();
        let b = lambda_m(-m, 0.0, 128).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn effective_energy_bounded_by_zero_mode(b in 0.0f64..10.0) {
        let (v, _) = AngularProblem::new(128).unwrap().effective_energy(b).unwrap();
        prop_assert!(v >= -1e-10 && v <= 0.25 * b * b + 1e-9);
    }
}
