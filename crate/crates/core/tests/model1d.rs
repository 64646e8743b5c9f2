use proptest::prelude::*;
use robinspec_core::fem1d::{graded_grid, uniform_grid};
use robinspec_core::fixtures::bundled;
use robinspec_core::model1d::*;
use robinspec_core::Error;

fn fixture(name: &str) -> f64 {
    bundled().get(name).unwrap()
}

#[test]
fn robin_half_line_ground_state() {
    let grid = graded_grid(40.0, 16_000, 1e-4);
    let form = WeightedForm1D::robin_flat(grid.clone(), 1.0, RightCondition::Dirichlet).unwrap();
    let mode = transverse_ground(&form).unwrap();
    assert!((mode.mu + 1.0).abs() < 1e-8, "{}", mode.mu);
    let n = grid.len();
    let norm: f64 = grid
        .windows(2)
        .zip(mode.f.windows(2))
        .map(|(t, f)| (t[1] - t[0]) * (f[0] * f[0] + f[0] * f[1] + f[1] * f[1]) / 3.0)
        .sum();
    assert!((norm - 1.0).abs() < 1e-8, "{norm}");
    assert!(mode.f[..n - 1].iter().all(|&v| v > 0.0));
}

#[test]
fn neumann_dirichlet_interval() {
    // β = 0: the smallest eigenvalue of −u'' on (0,1) with u'(0) = 0, u(1) = 0 is (π/2)²
    let form = WeightedForm1D::robin_flat(uniform_grid(0.0, 1.0, 4096), 0.0, RightCondition::Dirichlet).unwrap();
    let mu = transverse_ground(&form).unwrap().mu;
    let exact = std::f64::consts::FRAC_PI_2.powi(2);
    assert!((mu - exact).abs() < 1e-6 * exact, "{mu} vs {exact}");
}

#[test]
fn curved_weight_matches_fixture() {
    let grid = uniform_grid(0.0, 0.4, 8192);
    let w: Vec<f64> = grid.iter().map(|t| 1.0 - 2.0 * t - t * t).collect();
    let n = grid.len();
    let form = WeightedForm1D::new(grid, w, vec![0.0; n], 1.0, RightCondition::Dirichlet).unwrap();
    let mu = transverse_ground(&form).unwrap().mu;
    let target = fixture("robin_weight_1m2tmt2_T0_4");
    assert!((mu - target).abs() < 1e-6 * target.abs().max(1.0), "{mu} vs {target}");
}

#[test]
fn free_right_end_is_below_dirichlet() {
    let grid = uniform_grid(0.0, 2.0, 400);
    let free = transverse_ground(&WeightedForm1D::robin_flat(grid.clone(), 1.0, RightCondition::Free).unwrap()).unwrap();
    let dir = transverse_ground(&WeightedForm1D::robin_flat(grid, 1.0, RightCondition::Dirichlet).unwrap()).unwrap();
    assert!(free.mu < dir.mu);
    assert!(free.f.last().unwrap() > &0.0);
    assert_eq!(*dir.f.last().unwrap(), 0.0);
}

const H_LIST: [f64; 7] = [0.04, 0.028, 0.02, 0.014, 0.01, 0.007, 0.005];

#[test]
fn flat_transverse_expansion() {
    let fit = robin_transverse_expansion(0.0, 0.0, 1.0, &H_LIST, 0.3).unwrap();
    assert!((fit.coefficients[0] + 1.0).abs() < 1e-6, "{:?}", fit.coefficients);
    assert!(fit.coefficients[1].abs() < 1e-3, "{:?}", fit.coefficients);
}

#[test]
fn curved_transverse_expansion_signs() {
    for (kappa, c_star) in [(1.0, 1.0), (-0.5, 2.0)] {
        let fit = robin_transverse_expansion(kappa, c_star, 1.0, &H_LIST, 0.4).unwrap();
        assert!((fit.coefficients[0] + 1.0).abs() < 1e-4, "κ={kappa}: {:?}", fit.coefficients);
        let expected = -2.0 * kappa;
        assert!(
            (fit.coefficients[1] - expected).abs() < 0.02 * expected.abs(),
            "κ={kappa}: {:?}",
            fit.coefficients
        );
    }
}

#[test]
fn transverse_expansion_leading_term_is_geometry_free() {
    // smaller h keeps the first neglected term, of order h^{2+1/σ}, out of the fit
    let h_list = [0.01, 0.007, 0.005, 0.0035, 0.0025, 0.0018, 0.00125];
    for sigma in [0.8, 1.2] {
        for (kappa, c_star) in [(0.5, 0.0), (-1.0, 1.0)] {
            let fit = robin_transverse_expansion(kappa, c_star, sigma, &h_list, 0.15).unwrap();
            assert!(
                (fit.coefficients[0] + 1.0).abs() < 1e-4,
                "σ={sigma}, κ={kappa}: {:?}",
                fit.coefficients
            );
        }
    }
}

#[test]
fn transverse_expansion_rejects_bad_input() {
    assert!(matches!(robin_transverse_expansion(0.0, 0.0, 2.5, &H_LIST, 0.4), Err(Error::InvalidInput(_))));
    assert!(matches!(robin_transverse_expansion(0.0, -1.0, 1.0, &H_LIST, 0.4), Err(Error::InvalidInput(_))));
    assert!(matches!(
        robin_transverse_expansion(3.0, 1.0, 1.0, &H_LIST, 0.1),
        Err(Error::InvalidWeight { h: Some(_), .. })
    ));
}

#[test]
fn montgomery_values_match_fixtures() {
    let g = MontgomeryGrid::default();
    let l0 = montgomery_lambda(0.0, g.half_width, g.cells).unwrap();
    let lm = montgomery_lambda(-0.5, g.half_width, g.cells).unwrap();
    let l2 = montgomery_lambda(2.0, g.half_width, g.cells).unwrap();
    assert!((l0 - fixture("montgomery_lambda_0")).abs() < 1e-6, "{l0}");
    assert!((lm - fixture("montgomery_lambda_m0_5")).abs() < 1e-6, "{lm}");
    assert!(lm < l0 && l2 > l0);
}

#[test]
fn montgomery_minimum() {
    let m = montgomery_min().unwrap();
    assert!(m.zeta0 < 0.0 && m.nu0 > 0.0);
    assert!((m.nu0 - fixture("montgomery_nu0")).abs() < 1e-6, "{m:?}");
    assert!((m.zeta0 - fixture("montgomery_zeta0")).abs() < 1e-4, "{m:?}");
    let g = MontgomeryGrid::default();
    for z in [m.zeta0 - 0.1, m.zeta0 + 0.1] {
        assert!(montgomery_lambda(z, g.half_width, g.cells).unwrap() > m.nu0);
    }
    let fine = montgomery_min_on(MontgomeryGrid {
        half_width: g.half_width,
        cells: 2 * g.cells,
    })
    .unwrap();
    assert!((fine.nu0 - m.nu0).abs() < 1e-6 * m.nu0);
}

#[test]
fn montgomery_scan_is_continuous() {
    let zs: Vec<f64> = (0..=40).map(|i| -2.0 + 0.05 * i as f64).collect();
    let values: Vec<f64> = zs.iter().map(|&z| montgomery_lambda(z, 7.0, 4000).unwrap()).collect();
    for pair in values.windows(2) {
        assert!((pair[1] - pair[0]).abs() < 0.1, "{values:?}");
    }
    let close = montgomery_lambda(-0.5 + 1e-6, 7.0, 4000).unwrap();
    assert!((close - values[30]).abs() < 1e-5);
}

#[test]
fn harmonic_reduction_is_parameter_free() {
    let a = harmonic_ground(0.1, 0.0, 0.0, 2.0, 3.0, 6000).unwrap();
    let b = harmonic_ground(0.1, 5.0, 3.0, 2.0, 3.0, 6000).unwrap();
    assert!((a.value - b.value).abs() < 1e-9);
    assert!((a.value - 0.2).abs() < 1e-6, "{}", a.value);
    let flat = harmonic_ground(0.5, 1.3, -0.7, 0.0, 2.0, 100).unwrap();
    assert!(flat.degenerate_well && flat.value == 0.0);
}

#[test]
fn degennes_constant() {
    let d = degennes_theta0().unwrap();
    assert!(d.theta0 > 0.5 && d.theta0 < 1.0);
    assert!((d.theta0 - fixture("degennes_theta0")).abs() < 1e-6, "{d:?}");
    let long = degennes_theta0_on(DeGennesGrid {
        length: 40.0,
        ..DeGennesGrid::default()
    })
    .unwrap();
    assert!((long.theta0 - d.theta0).abs() < 1e-6);
    assert!((degennes_lambda(0.0, DeGennesGrid::default()).unwrap() - 1.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn harmonic_ground_is_eta_h(h in 0.02f64..0.5, eta in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0], m in -5.0f64..5.0, xi in -5.0f64..5.0) {
        let width = (h / eta.abs()).sqrt();
        let g = harmonic_ground(h, m, xi, eta, 10.0 * width, 4000).unwrap();
        prop_assert!(((g.value - eta.abs() * h) / (eta.abs() * h)).abs() < 1e-5);
    }

    #[test]
    fn ground_state_is_positive(beta in -2.0f64..2.0, curvature in -1.0f64..1.0, length in 0.5f64..3.0) {
        let grid = uniform_grid(0.0, length, 200);
        let w: Vec<f64> = grid.iter().map(|t| (1.0 - 0.3 * curvature * t / length).max(0.1)).collect();
        let v: Vec<f64> = grid.iter().map(|t| (3.0 * t).sin()).collect();
        let form = WeightedForm1D::new(grid, w, v, beta, RightCondition::Free).unwrap();
        let mode = transverse_ground(&form).unwrap();
        prop_assert!(mode.f.iter().all(|&x| x > 0.0));
    }
}
