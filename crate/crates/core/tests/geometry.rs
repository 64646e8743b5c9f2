use nalgebra::{DMatrix, DVector, Matrix2};
use proptest::prelude::*;
use robinspec_core::geometry::{
    c0, curvature_at, effective_energy, effective_energy_with, localization_potential, predict_eigenvalues,
    CallbackSurface, ChartDomain, ChartPoint, Ellipsoid, EnergyOptions, ExpansionSource, Jet, MagneticField, ParamSurface, Point3,
};
use robinspec_core::Error;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

/// Closed-form mean curvature of x²/a² + y²/b² + z²/c² = 1.
fn ellipsoid_kappa([a, b, c]: [f64; 3], p: &Point3) -> f64 {
    let r2 = p.norm_squared();
    let q = p.x * p.x / a.powi(4) + p.y * p.y / b.powi(4) + p.z * p.z / c.powi(4);
    (a * a + b * b + c * c - r2) / (2.0 * a * a * b * b * c * c * q.powf(1.5))
}

/// Outward unit normal from the implicit gradient.
fn ellipsoid_normal([a, b, c]: [f64; 3], p: &Point3) -> Point3 {
    Point3::new(p.x / (a * a), p.y / (b * b), p.z / (c * c)).normalize()
}

#[test]
fn ellipsoid_curvature_at_poles_matches_closed_form() {
    let axes = [1.0, 1.2, 1.5];
    let e = Ellipsoid::new(axes[0], axes[1], axes[2]);
    // z-pole through the x-polar chart, x-pole and y-pole through the z-polar chart
    for (chart, y) in [
        (1, ChartPoint::new(FRAC_PI_2, FRAC_PI_2)),
        (0, ChartPoint::new(FRAC_PI_2, 0.0)),
        (0, ChartPoint::new(FRAC_PI_2, FRAC_PI_2)),
    ] {
        let c = curvature_at(&e, chart, y).unwrap();
        let oracle = ellipsoid_kappa(axes, &c.point);
        assert!((c.kappa - oracle).abs() < 1e-8, "{} vs {oracle}", c.kappa);
    }
}

#[test]
fn ellipsoid_energy_matches_dense_oracle() {
    let axes = [1.0, 1.1, 1.3];
    let e = Ellipsoid::new(axes[0], axes[1], axes[2]);
    let b = MagneticField::uniform(0.0, 0.0, 1.0);
    let found = effective_energy(&e, &b, 1.0, 1.0).unwrap();

    // 10⁶ samples of the implicit-surface formulas on a grid containing the symmetry planes
    let n = 1000;
    let mut best = (f64::INFINITY, Point3::zeros());
    for i in 1..n {
        let t = PI * i as f64 / n as f64;
        for j in 0..n {
            let p = -PI + 2.0 * PI * j as f64 / n as f64;
            let x = Point3::new(axes[0] * t.sin() * p.cos(), axes[1] * t.sin() * p.sin(), axes[2] * t.cos());
            let v = ellipsoid_normal(axes, &x).z.abs() - 2.0 * ellipsoid_kappa(axes, &x);
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    assert!((found.value - best.0).abs() < 1e-8, "{} vs {}", found.value, best.0);
    let x0 = Point3::from(found.minimizer.x);
    assert!((x0.abs() - best.1.abs()).norm() < 1e-4, "{x0:?} vs {:?}", best.1);
    // the minimum sits on the equator where B·n = 0
    assert!(found.degenerate);
    assert!(matches!(c0(&e, &b), Err(Error::AssumptionViolated(_))));
}

#[test]
fn ellipsoid_c0_matches_quadratic_fit() {
    let axes = [1.0, 1.1, 1.3];
    let e = Ellipsoid::new(axes[0], axes[1], axes[2]);
    let b = MagneticField::uniform(0.0, 0.0, 0.5);
    let found = effective_energy(&e, &b, 1.0, 1.0).unwrap();
    assert!(!found.degenerate);
    assert_eq!(found.wells, 2);
    let x0 = Point3::from(found.minimizer.x);
    assert!(x0.x.abs() < 1e-6 && x0.y.abs() < 1e-6 && (x0.z.abs() - 1.3).abs() < 1e-9);
    let value = c0(&e, &b).unwrap();

    // graph chart z = c√(1 − x²/a² − y²/b²) is isometric to first order at the pole
    let potential = |x: f64, y: f64| {
        let z = axes[2] * (1.0 - x * x / axes[0].powi(2) - y * y / axes[1].powi(2)).sqrt();
        let p = Point3::new(x, y, z);
        0.5 * ellipsoid_normal(axes, &p).z.abs() - 2.0 * ellipsoid_kappa(axes, &p)
    };
    let r = 2e-3;
    let mut rows = vec![];
    let mut rhs = vec![];
    for i in -3..=3 {
        for j in -3..=3 {
            let (x, y) = (r * i as f64 / 3.0, r * j as f64 / 3.0);
            rows.extend_from_slice(&[1.0, x, y, x * x, x * y, y * y]);
            rhs.push(potential(x, y));
        }
    }
    let design = DMatrix::from_row_slice(rhs.len(), 6, &rows);
    let coef = design.svd(true, true).solve(&DVector::from_vec(rhs), 1e-14).unwrap();
    let hess = Matrix2::new(2.0 * coef[3], coef[4], coef[4], 2.0 * coef[5]);
    let oracle = hess.determinant().sqrt() / (2.0 * 0.5);
    assert!((value - oracle).abs() < 1e-4 * oracle, "{value} vs {oracle}");
}

#[test]
fn zero_field_selects_maximal_curvature() {
    let axes = [1.0, 1.1, 1.3];
    let e = Ellipsoid::new(axes[0], axes[1], axes[2]);
    let zero = MagneticField::uniform(0.0, 0.0, 0.0);
    let gamma = 4.0;
    let found = effective_energy(&e, &zero, gamma, 0.5).unwrap();
    let kmax = ellipsoid_kappa(axes, &Point3::new(0.0, 0.0, 1.3));
    assert!((found.value + 2.0 * gamma * kmax).abs() < 1e-9);
    assert!((found.minimizer.x[2].abs() - 1.3).abs() < 1e-9);
}

#[test]
fn energy_agrees_across_charts() {
    let e = Ellipsoid::new(1.0, 1.2, 1.5);
    let b = MagneticField::uniform(0.3, -0.2, 0.8);
    let run = |chart: usize| {
        let opts = EnergyOptions {
            charts: Some(vec![chart]),
            ..Default::default()
        };
        effective_energy_with(&e, &b, 2.0, 1.0, &opts).unwrap().value
    };
    let (a, c) = (run(0), run(1));
    assert!((a - c).abs() < 1e-6, "{a} vs {c}");
}

/// Chart 1 of an ellipsoid composed with (y₁, y₂) ↦ (y₁ + ε sin y₂, y₂).
struct Warped(Ellipsoid, f64);

impl ParamSurface for Warped {
    fn charts(&self) -> usize {
        1
    }
    fn domain(&self, _: usize) -> ChartDomain {
        self.0.domain(1)
    }
    fn jet(&self, _: usize, y: ChartPoint) -> Jet {
        let eps = self.1;
        let (s, c) = y.y2.sin_cos();
        let j = self.0.jet(1, ChartPoint::new(y.y1 + eps * s, y.y2));
        let [p1, p2] = j.d;
        let [[p11, p12], [_, p22]] = j.dd;
        let mixed = p11 * eps * c + p12;
        Jet {
            point: j.point,
            d: [p1, p1 * eps * c + p2],
            dd: [
                [p11, mixed],
                [mixed, p11 * (eps * c).powi(2) + p12 * 2.0 * eps * c + p22 - p1 * eps * s],
            ],
        }
    }
    fn diameter(&self) -> f64 {
        self.0.diameter()
    }
}

#[test]
fn minimizer_invariant_under_reparametrization() {
    let e = Ellipsoid::new(1.0, 1.1, 1.3);
    let b = MagneticField::uniform(0.0, 0.0, 0.5);
    let plain = effective_energy(&e, &b, 1.0, 1.0).unwrap();
    let other = effective_energy(&Warped(e, 0.05), &b, 1.0, 1.0).unwrap();
    let (p, q) = (Point3::from(plain.minimizer.x), Point3::from(other.minimizer.x));
    assert!((p.abs() - q.abs()).norm() < 1e-7, "{p:?} vs {q:?}");
    assert!((plain.value - other.value).abs() < 1e-10);
    assert!((plain.hessian.determinant() - other.hessian.determinant()).abs() < 1e-5);
}

#[test]
fn callback_surface_tracks_analytic_minimum() {
    let e = Ellipsoid::new(1.0, 1.1, 1.3);
    let b = MagneticField::uniform(0.0, 0.0, 0.5);
    let plain = effective_energy(&e, &b, 1.0, 1.0).unwrap();
    let callback = CallbackSurface::new(Arc::new(move |y: ChartPoint| e.jet(1, y).point), e.domain(1));
    let other = effective_energy(&callback, &b, 1.0, 1.0).unwrap();
    assert!((plain.value - other.value).abs() < 1e-6);
}

#[test]
fn localization_potential_on_equator() {
    let s = Ellipsoid::sphere(1.0);
    let b = MagneticField::uniform(0.0, 0.0, 1.0);
    let h: f64 = 0.02;
    let x = Point3::new(1.0 - 0.3 * h.powf(0.4), 0.0, 0.0);
    let u = localization_potential(&s, &b, h, 1.0, &x, 0.0).unwrap();
    assert!((u - (-1.0 - 2.0 * h)).abs() < 1e-12, "{u}");
}

#[test]
fn ball_prediction_terms() {
    let s = Ellipsoid::sphere(1.0);
    let b = MagneticField::uniform(0.0, 0.0, 1.0);
    let nu0 = 0.5698;
    let p = predict_eigenvalues(&s, &b, 100.0, 1.0, 1, nu0);
    let ball = p.expansion(ExpansionSource::UniformBall).unwrap();
    assert!(ball.applicable);
    let expect = -10000.0 - 200.0 + nu0 * 100f64.powf(2.0 / 3.0);
    assert!((ball.known_sum() - expect).abs() < 1e-9);
    assert!(!p.expansion(ExpansionSource::HarmonicWell).unwrap().applicable);
}

#[test]
fn symmetric_wells_block_the_harmonic_expansion() {
    // central symmetry of an ellipsoid puts the minimum at two antipodal points
    let e = Ellipsoid::new(1.0, 1.1, 1.3);
    let b = MagneticField::uniform(0.0, 0.0, 0.5);
    let p = predict_eigenvalues(&e, &b, 10.0, 1.0, 1, 0.57);
    let well = p.expansion(ExpansionSource::HarmonicWell).unwrap();
    assert!(!well.applicable);
    assert!(well.note.as_deref().unwrap().contains("2 separate wells"), "{:?}", well.note);
}

#[test]
fn regime_leading_terms() {
    let e = Ellipsoid::new(1.0, 1.1, 1.3);
    let b = MagneticField::uniform(0.0, 0.0, 1.0);
    let gamma = 50.0;
    let kmax = ellipsoid_kappa([1.0, 1.1, 1.3], &Point3::new(0.0, 0.0, 1.3));
    let low = predict_eigenvalues(&e, &b, gamma, 0.5, 1, 0.57);
    let term = low.expansion(ExpansionSource::RegimeLeading).unwrap().terms[1].value.unwrap();
    assert!((term + 2.0 * gamma * kmax).abs() < 1e-8);
    let high = predict_eigenvalues(&e, &b, gamma, 1.5, 1, 0.57);
    let term = high.expansion(ExpansionSource::RegimeLeading).unwrap().terms[1].value.unwrap();
    // min |B·n| = 0 on the equator
    assert!(term.abs() < 1e-6);
}

fn arb_ellipsoid() -> impl Strategy<Value = Ellipsoid> {
    (0.6f64..1.8, 0.6f64..1.8, 0.6f64..1.8).prop_map(|(a, b, c)| Ellipsoid::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weingarten_identity(e in arb_ellipsoid(), chart in 0usize..2, t in 0.2f64..2.9, p in -3.1f64..3.1) {
        let c = curvature_at(&e, chart, ChartPoint::new(t, p)).unwrap();
        let predicted = c.second * c.first.try_inverse().unwrap() * c.second;
        prop_assert!((predicted - c.third).norm() < 1e-8 * (1.0 + c.third.norm()));
        prop_assert!(c.first.determinant() > 0.0);
    }

    #[test]
    fn chart_invariance_of_curvature_and_flux(e in arb_ellipsoid(), t in 0.3f64..2.8, p in -3.0f64..3.0,
                                              bx in -1.0f64..1.0, bz in -1.0f64..1.0) {
        let b = Point3::new(bx, 0.4, bz);
        let x = e.jet(0, ChartPoint::new(t, p)).point;
        let y1 = e.locate(1, &x).unwrap();
        prop_assume!(y1.y1 > 0.05 && y1.y1 < PI - 0.05);
        let c0 = curvature_at(&e, 0, ChartPoint::new(t, p)).unwrap();
        let c1 = curvature_at(&e, 1, y1).unwrap();
        prop_assert!((c0.kappa - c1.kappa).abs() < 1e-6);
        prop_assert!((b.dot(&c0.normal).abs() - b.dot(&c1.normal).abs()).abs() < 1e-6);
    }

    #[test]
    fn curvature_scales_inversely(e in arb_ellipsoid(), scale in 0.3f64..4.0, t in 0.2f64..2.9, p in -3.0f64..3.0) {
        let [a, b, c] = e.axes();
        let big = Ellipsoid::new(scale * a, scale * b, scale * c);
        let y = ChartPoint::new(t, p);
        let k0 = curvature_at(&e, 0, y).unwrap().kappa;
        let k1 = curvature_at(&big, 0, y).unwrap().kappa;
        prop_assert!((k1 * scale - k0).abs() < 1e-8 * k0.abs().max(1.0));
    }
}
