//! Parametric boundary surfaces, fundamental forms and mean curvature.
//!
//! Conventions: n is the outward unit normal, K_ij = ⟨∂_iΦ, ∂_j n⟩, L_ij = ⟨∂_i n, ∂_j n⟩
//! and κ = ½ tr(G⁻¹K), so the unit sphere has κ = 1.

mod energy;
mod surfaces;

pub use energy::{
    c0, c0_from_minimum, c_star_bound, effective_energy, effective_energy_with, localization_potential,
    minimize_landscape, predict_eigenvalues, project_to_surface, EffectiveBoundaryEnergy,
    EigenvaluePrediction, EnergyLandscape, EnergyOptions, Expansion, ExpansionSource, LandscapeSample,
    PredictionTerm, Projection, SurfaceLandscape,
};
pub use surfaces::{CallbackSurface, Ellipsoid, PlanePatch, TabulatedSurface};

use crate::error::{Error, Result};
use nalgebra::{Matrix2, Vector3};
use serde::Serialize;
use std::sync::Arc;

pub type Point3 = Vector3<f64>;

/// Coordinates (y₁, y₂) in one chart of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartPoint {
    pub y1: f64,
    pub y2: f64,
}

impl ChartPoint {
    pub fn new(y1: f64, y2: f64) -> Self {
        Self { y1, y2 }
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.y1, self.y2]
    }
}

impl From<[f64; 2]> for ChartPoint {
    fn from(y: [f64; 2]) -> Self {
        Self::new(y[0], y[1])
    }
}

/// Rectangular parameter domain of a chart.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChartDomain {
    pub y1: (f64, f64),
    pub y2: (f64, f64),
    pub periodic: [bool; 2],
}

impl ChartDomain {
    /// Wraps periodic coordinates into the domain and reports whether y lies inside.
    pub fn normalize(&self, y: ChartPoint) -> Option<ChartPoint> {
        let wrap = |v: f64, (a, b): (f64, f64), periodic: bool| -> Option<f64> {
            if periodic {
                Some(a + (v - a).rem_euclid(b - a))
            } else if v > a && v < b {
                Some(v)
            } else {
                None
            }
        };
        Some(ChartPoint::new(
            wrap(y.y1, self.y1, self.periodic[0])?,
            wrap(y.y2, self.y2, self.periodic[1])?,
        ))
    }

    /// Tensor sample grid: cell-centred on bounded axes, uniform from the start on periodic ones.
    pub fn samples(&self, n1: usize, n2: usize) -> (Vec<f64>, Vec<f64>) {
        let axis = |(a, b): (f64, f64), n: usize, periodic: bool| -> Vec<f64> {
            let step = (b - a) / n as f64;
            let offset = if periodic { 0.0 } else { 0.5 };
            (0..n).map(|j| a + (j as f64 + offset) * step).collect()
        };
        (
            axis(self.y1, n1, self.periodic[0]),
            axis(self.y2, n2, self.periodic[1]),
        )
    }
}

/// Position with first and second derivatives at a chart point.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub point: Point3,
    pub d: [Point3; 2],
    pub dd: [[Point3; 2]; 2],
}

/// A parametric surface covered by one or more charts, each oriented by the outward normal.
pub trait ParamSurface: Send + Sync {
    fn charts(&self) -> usize;

    fn domain(&self, chart: usize) -> ChartDomain;

    fn jet(&self, chart: usize, y: ChartPoint) -> Jet;

    /// Chart coordinates of a surface point, when the chart has an explicit inverse.
    fn locate(&self, _chart: usize, _x: &Point3) -> Option<ChartPoint> {
        None
    }

    /// An interior point from which the surface is star-shaped (convex analytic surfaces).
    fn center(&self) -> Option<Point3> {
        None
    }

    fn diameter(&self) -> f64;

    fn closed(&self) -> bool {
        true
    }

    /// Radius when the surface is a round sphere.
    fn sphere_radius(&self) -> Option<f64> {
        None
    }
}

/// Fundamental forms, mean curvature and normal at a chart point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvatureData {
    pub first: Matrix2<f64>,
    pub second: Matrix2<f64>,
    pub third: Matrix2<f64>,
    pub kappa: f64,
    pub normal: Point3,
    #[serde(skip)]
    pub normal_derivatives: [Point3; 2],
    #[serde(skip)]
    pub point: Point3,
}

impl CurvatureData {
    /// Shape operator G⁻¹K.
    pub fn shape_operator(&self) -> Matrix2<f64> {
        self.first.try_inverse().expect("metric is positive definite") * self.second
    }

    pub fn gauss_curvature(&self) -> f64 {
        self.second.determinant() / self.first.determinant()
    }
}

/// Relative size below which |∂₁Φ × ∂₂Φ| counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

pub fn curvature_at(surface: &dyn ParamSurface, chart: usize, y: ChartPoint) -> Result<CurvatureData> {
    curvature_from_jet(&surface.jet(chart, y), y)
}

pub(crate) fn curvature_from_jet(jet: &Jet, y: ChartPoint) -> Result<CurvatureData> {
    let [d1, d2] = jet.d;
    let cross = d1.cross(&d2);
    let area = cross.norm();
    if !(area > RANK_TOLERANCE * d1.norm() * d2.norm()) || !area.is_finite() {
        return Err(Error::DegenerateChart(y.y1, y.y2));
    }
    let normal = cross / area;
    let dn = [0, 1].map(|j| {
        let dcross = jet.dd[0][j].cross(&d2) + d1.cross(&jet.dd[1][j]);
        (dcross - normal * normal.dot(&dcross)) / area
    });
    let first = Matrix2::new(d1.dot(&d1), d1.dot(&d2), d2.dot(&d1), d2.dot(&d2));
    let second = Matrix2::from_fn(|i, j| jet.d[i].dot(&dn[j]));
    let second = 0.5 * (second + second.transpose());
    let third = Matrix2::from_fn(|i, j| dn[i].dot(&dn[j]));
    let kappa = 0.5 * (first.try_inverse().ok_or(Error::DegenerateChart(y.y1, y.y2))? * second).trace();
    Ok(CurvatureData {
        first,
        second,
        third,
        kappa,
        normal,
        normal_derivatives: dn,
        point: jet.point,
    })
}

/// Chart conditioning in (0, 1]: √det G over half its trace; 0 at a chart singularity.
pub fn chart_quality(surface: &dyn ParamSurface, chart: usize, y: ChartPoint) -> f64 {
    let jet = surface.jet(chart, y);
    let g11 = jet.d[0].norm_squared();
    let g22 = jet.d[1].norm_squared();
    let area = jet.d[0].cross(&jet.d[1]).norm();
    if g11 + g22 > 0.0 {
        2.0 * area / (g11 + g22)
    } else {
        0.0
    }
}

/// Chart with the best conditioning at a surface point, together with its coordinates.
pub fn best_chart(surface: &dyn ParamSurface, x: &Point3) -> Option<(usize, ChartPoint)> {
    (0..surface.charts())
        .filter_map(|c| surface.locate(c, x).map(|y| (c, y)))
        .map(|(c, y)| (chart_quality(surface, c, y), c, y))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c, y)| (c, y))
}

/// Checks ⟨Φ − center, n⟩ > 0 on a sample grid of every chart.
pub fn validate_orientation(surface: &dyn ParamSurface, samples: usize) -> Result<()> {
    let Some(center) = surface.center() else {
        return Ok(());
    };
    for chart in 0..surface.charts() {
        let dom = surface.domain(chart);
        let (g1, g2) = dom.samples(samples, samples);
        for &y1 in &g1 {
            for &y2 in &g2 {
                let y = ChartPoint::new(y1, y2);
                let c = curvature_at(surface, chart, y)?;
                if (c.point - center).dot(&c.normal) <= 0.0 {
                    return Err(Error::AssumptionViolated(format!(
                        "chart {chart} normal points inward at ({y1}, {y2})"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// A magnetic field on ℝ³.
#[derive(Clone)]
pub enum MagneticField {
    Uniform(Point3),
    Callback(Arc<dyn Fn(&Point3) -> Point3 + Send + Sync>),
}

impl std::fmt::Debug for MagneticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MagneticField::Uniform(b) => write!(f, "Uniform({}, {}, {})", b.x, b.y, b.z),
            MagneticField::Callback(_) => write!(f, "Callback"),
        }
    }
}

impl MagneticField {
    pub fn uniform(bx: f64, by: f64, bz: f64) -> Self {
        MagneticField::Uniform(Point3::new(bx, by, bz))
    }

    pub fn at(&self, x: &Point3) -> Point3 {
        match self {
            MagneticField::Uniform(b) => *b,
            MagneticField::Callback(f) => f(x),
        }
    }

    pub fn as_uniform(&self) -> Option<Point3> {
        match self {
            MagneticField::Uniform(b) => Some(*b),
            MagneticField::Callback(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_sphere_has_unit_mean_curvature_everywhere() {
        let s = Ellipsoid::sphere(1.0);
        for chart in 0..2 {
            for &(t, p) in &[(0.3, 0.1), (1.2, -2.0), (2.9, 3.0), (std::f64::consts::FRAC_PI_2, 0.0)] {
                let c = curvature_at(&s, chart, ChartPoint::new(t, p)).unwrap();
                assert!((c.kappa - 1.0).abs() < 1e-10, "{}", c.kappa);
                let shape = c.shape_operator();
                assert!((shape - Matrix2::identity()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn sphere_radius_scales_curvature() {
        let s = Ellipsoid::sphere(2.5);
        let c = curvature_at(&s, 0, ChartPoint::new(0.7, 1.1)).unwrap();
        assert!((c.kappa - 0.4).abs() < 1e-12);
    }

    #[test]
    fn pole_of_polar_chart_is_degenerate() {
        let s = Ellipsoid::sphere(1.0);
        let r = curvature_at(&s, 0, ChartPoint::new(0.0, 0.3));
        assert!(matches!(r, Err(Error::DegenerateChart(..))));
    }

    #[test]
    fn ellipsoid_charts_are_outward() {
        let e = Ellipsoid::new(1.0, 1.2, 1.5);
        validate_orientation(&e, 16).unwrap();
    }

    #[test]
    fn weingarten_on_ellipsoid() {
        let e = Ellipsoid::new(1.0, 1.2, 1.5);
        let c = curvature_at(&e, 1, ChartPoint::new(0.8, 0.4)).unwrap();
        let predicted = c.second * c.first.try_inverse().unwrap() * c.second;
        assert!((predicted - c.third).norm() < 1e-10);
    }

    #[test]
    fn periodic_normalization_wraps() {
        let d = ChartDomain {
            y1: (0.0, 1.0),
            y2: (-1.0, 1.0),
            periodic: [false, true],
        };
        let y = d.normalize(ChartPoint::new(0.5, 1.5)).unwrap();
        assert!((y.y2 + 0.5).abs() < 1e-15);
        assert!(d.normalize(ChartPoint::new(1.5, 0.0)).is_none());
    }
}
