use proptest::prelude::*;
use robinspec_core::asymfit::{fit_expansion, richardson, MAX_CONDITION};
use robinspec_core::fixtures::{bundled, oracle};
use robinspec_core::model1d::montgomery_lambda;
use robinspec_core::Error;

#[test]
fn dirichlet_laplacian_extrapolates_to_pi_squared() {
    let values: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| oracle::dirichlet_line(|_| 0.0, 0.5, n))
        .collect();
    let r = richardson(&values, 2.0).unwrap();
    let exact = std::f64::consts::PI.powi(2);
    assert!((r.limit - exact).abs() < 1e-6, "{} vs {exact}", r.limit);
    assert!((r.observed_order.unwrap() - 2.0).abs() < 0.01);
}

#[test]
fn montgomery_elements_extrapolate_to_fixture() {
    let values: Vec<f64> = [1000, 2000, 4000]
        .iter()
        .map(|&n| montgomery_lambda(0.0, 7.0, n).unwrap())
        .collect();
    let r = richardson(&values, 2.0).unwrap();
    let target = bundled().get("montgomery_lambda_0").unwrap();
    assert!((r.limit - target).abs() < 1e-7, "{} vs {target}", r.limit);
    assert!((r.observed_order.unwrap() - 2.0).abs() < 0.05);
}

#[test]
fn separated_exponents_stay_well_conditioned() {
    let hs = [0.04, 0.028, 0.02, 0.014, 0.01];
    let f = |h: f64| -1.0 - 2.0 * h + 0.57 * h.powf(4.0 / 3.0);
    let samples: Vec<(f64, f64)> = hs.iter().map(|&h| (h, f(h))).collect();
    let r = fit_expansion(&samples, &[0.0, 1.0, 4.0 / 3.0]).unwrap();
    assert!(r.condition < MAX_CONDITION);
    for (c, e) in r.coefficients.iter().zip([-1.0, -2.0, 0.57]) {
        assert!((c - e).abs() < 1e-8 * e.abs().max(1.0), "{:?}", r.coefficients);
    }
    // samples are echoed in increasing h
    let mut sorted = samples.clone();
    sorted.reverse();
    assert_eq!(r.samples, sorted);
}

#[test]
fn fit_rejects_bad_exponents_and_too_few_samples() {
    let s = [(0.1, 1.0), (0.05, 0.9), (0.02, 0.8)];
    assert!(fit_expansion(&s, &[]).is_err());
    assert!(fit_expansion(&s, &[1.0, 1.0]).is_err());
    assert!(fit_expansion(&s, &[0.0, 1.0, 2.0]).is_err());
    assert!(matches!(richardson(&[1.0, 0.5], 2.0), Err(Error::InvalidInput(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn noiseless_data_in_span_is_recovered(c in proptest::array::uniform3(-5.0f64..5.0)) {
        let hs: [f64; 6] = [0.08, 0.05, 0.03, 0.02, 0.012, 0.008];
        let samples: Vec<(f64, f64)> = hs.iter().map(|&h| (h, c[0] + c[1] * h.powf(0.5) + c[2] * h * h)).collect();
        let r = fit_expansion(&samples, &[0.0, 0.5, 2.0]).unwrap();
        for (x, y) in r.coefficients.iter().zip(&c) {
            prop_assert!((x - y).abs() < 1e-10 * y.abs().max(1.0));
        }
    }

    #[test]
    fn sample_order_does_not_matter(seed in any::<u64>()) {
        let hs: [f64; 6] = [0.04, 0.028, 0.02, 0.014, 0.01, 0.007];
        let samples: Vec<(f64, f64)> = hs.iter().map(|&h| (h, -1.0 - 2.0 * h + (5.0 * h).sin() * h)).collect();
        let mut shuffled = samples.clone();
        let mut state = seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        let a = fit_expansion(&samples, &[0.0, 1.0, 2.0]).unwrap();
        let b = fit_expansion(&shuffled, &[0.0, 1.0, 2.0]).unwrap();
        prop_assert_eq!(a.coefficients, b.coefficients);
        prop_assert_eq!(a.residual, b.residual);
    }
}
