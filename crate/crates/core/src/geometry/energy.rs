//! The effective boundary energy |b·n| − 2κγ, its minimizer and Hessian, the harmonic-well
//! constant c₀, eigenvalue predictions and the localization potential.

use super::{
    best_chart, curvature_at, ChartDomain, ChartPoint, MagneticField, ParamSurface, Point3,
};
use crate::error::{Error, Result};
use crate::optimize::nelder_mead;
use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use rayon::prelude::*;
use serde::Serialize;

/// One evaluation of an energy landscape on a chart.
#[derive(Debug, Clone, Copy)]
pub struct LandscapeSample {
    pub value: f64,
    /// Signed normal field component B·n.
    pub field_normal: f64,
    pub metric: Matrix2<f64>,
    pub point: Point3,
}

/// A scalar function on a charted surface, minimized by [`minimize_landscape`].
pub trait EnergyLandscape: Sync {
    fn charts(&self) -> usize;
    fn domain(&self, chart: usize) -> ChartDomain;
    fn sample(&self, chart: usize, y: ChartPoint) -> Result<LandscapeSample>;
    /// Best-conditioned chart for a point on the surface, if the charts can be inverted.
    fn relocate(&self, _x: &Point3) -> Option<(usize, ChartPoint)> {
        None
    }
    fn diameter(&self) -> f64;
    /// Size of the field used by the B·n(x₀) = 0 gate.
    fn field_scale(&self) -> f64;
}

/// x ↦ field_weight·|B·n(x)| − 2·curvature_weight·κ(x) on a surface.
pub struct SurfaceLandscape<'a> {
    pub surface: &'a dyn ParamSurface,
    pub field: &'a MagneticField,
    pub field_weight: f64,
    pub curvature_weight: f64,
}

impl<'a> SurfaceLandscape<'a> {
    /// The landscape of ℰ(γ, γ^σ B): weights γ^σ and γ.
    pub fn effective(surface: &'a dyn ParamSurface, field: &'a MagneticField, gamma: f64, sigma: f64) -> Self {
        Self {
            surface,
            field,
            field_weight: gamma.powf(sigma),
            curvature_weight: gamma,
        }
    }
}

impl EnergyLandscape for SurfaceLandscape<'_> {
    fn charts(&self) -> usize {
        self.surface.charts()
    }

    fn domain(&self, chart: usize) -> ChartDomain {
        self.surface.domain(chart)
    }

    fn sample(&self, chart: usize, y: ChartPoint) -> Result<LandscapeSample> {
        let c = curvature_at(self.surface, chart, y)?;
        let bn = self.field.at(&c.point).dot(&c.normal);
        Ok(LandscapeSample {
            value: self.field_weight * bn.abs() - 2.0 * self.curvature_weight * c.kappa,
            field_normal: bn,
            metric: c.first,
            point: c.point,
        })
    }

    fn relocate(&self, x: &Point3) -> Option<(usize, ChartPoint)> {
        best_chart(self.surface, x)
    }

    fn diameter(&self) -> f64 {
        self.surface.diameter()
    }

    fn field_scale(&self) -> f64 {
        match self.field.as_uniform() {
            Some(b) => b.norm(),
            None => {
                let (g1, g2) = self.surface.domain(0).samples(32, 32);
                g1.iter()
                    .flat_map(|&a| g2.iter().map(move |&b| ChartPoint::new(a, b)))
                    .map(|y| self.field.at(&self.surface.jet(0, y).point).norm())
                    .fold(0.0, f64::max)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnergyOptions {
    /// Pre-scan resolution (y₁ samples, y₂ samples) per chart.
    pub scan: [usize; 2],
    /// Charts to scan; all charts when `None`.
    pub charts: Option<Vec<usize>>,
    /// Simplex size at which local refinement stops, in chart units.
    pub xtol: f64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self {
            scan: [256, 512],
            charts: None,
            xtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceLocation {
    pub chart: usize,
    pub y: ChartPoint,
    pub x: [f64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveBoundaryEnergy {
    pub value: f64,
    pub minimizer: SurfaceLocation,
    /// Hessian at the minimizer in a G-orthonormal frame.
    pub hessian: Matrix2<f64>,
    pub degenerate: bool,
    pub field_normal: f64,
    /// Diameter of the near-minimal sample set around the minimizer.
    pub level_set_diameter: f64,
    /// Number of separate near-minimal sample components (symmetric wells).
    pub wells: usize,
}

/// Relative level below which scanned values count as minimal.
const LEVEL_TOLERANCE: f64 = 1e-9;
/// Level sets wider than this fraction of the surface diameter are degenerate.
const DIAMETER_FRACTION: f64 = 1e-3;
/// |B·n(x₀)| below this fraction of ‖B‖ counts as zero.
const FIELD_NORMAL_FRACTION: f64 = 1e-8;
/// Chart-coordinate step for finite-difference Hessians.
const HESSIAN_STEP: f64 = 1e-4;

/// Minimizes |B·n|γ^σ − 2κγ over the surface.
pub fn effective_energy(
    surface: &dyn ParamSurface,
    field: &MagneticField,
    gamma: f64,
    sigma: f64,
) -> Result<EffectiveBoundaryEnergy> {
    effective_energy_with(surface, field, gamma, sigma, &EnergyOptions::default())
}

pub fn effective_energy_with(
    surface: &dyn ParamSurface,
    field: &MagneticField,
    gamma: f64,
    sigma: f64,
    options: &EnergyOptions,
) -> Result<EffectiveBoundaryEnergy> {
    minimize_landscape(&SurfaceLandscape::effective(surface, field, gamma, sigma), options)
}

struct Scan {
    chart: usize,
    argmin: ChartPoint,
    value: f64,
    diameter: f64,
    components: usize,
    lowest: Vec<(f64, f64)>,
}

fn scan_chart(land: &dyn EnergyLandscape, chart: usize, [n1, n2]: [usize; 2]) -> Scan {
    let dom = land.domain(chart);
    let (g1, g2) = dom.samples(n1, n2);
    let samples: Vec<(f64, Point3)> = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let y = ChartPoint::new(g1[k / n2], g2[k % n2]);
            match land.sample(chart, y) {
                Ok(s) if s.value.is_finite() => (s.value, s.point),
                _ => (f64::INFINITY, Point3::zeros()),
            }
        })
        .collect();
    let (best, fmin) = samples
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, s)| if s.0 < acc.1 { (k, s.0) } else { acc });
    let fmax = samples.iter().filter(|s| s.0.is_finite()).map(|s| s.0.abs()).fold(1.0, f64::max);
    let level = fmin + LEVEL_TOLERANCE * fmax;
    let low: Vec<bool> = samples.iter().map(|s| s.0 <= level).collect();

    // flood fill the near-minimal sample components
    let mut label = vec![usize::MAX; n1 * n2];
    let mut components = 0;
    let mut diameter = 0.0;
    for seed in 0..n1 * n2 {
        if !low[seed] || label[seed] != usize::MAX {
            continue;
        }
        let mut stack = vec![seed];
        label[seed] = components;
        let mut lo = Point3::repeat(f64::INFINITY);
        let mut hi = Point3::repeat(f64::NEG_INFINITY);
        while let Some(k) = stack.pop() {
            lo = lo.inf(&samples[k].1);
            hi = hi.sup(&samples[k].1);
            let (i, j) = ((k / n2) as isize, (k % n2) as isize);
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (mut a, mut b) = (i + di, j + dj);
                if dom.periodic[0] {
                    a = a.rem_euclid(n1 as isize);
                }
                if dom.periodic[1] {
                    b = b.rem_euclid(n2 as isize);
                }
                if a < 0 || b < 0 || a >= n1 as isize || b >= n2 as isize {
                    continue;
                }
                let q = a as usize * n2 + b as usize;
                if low[q] && label[q] == usize::MAX {
                    label[q] = components;
                    stack.push(q);
                }
            }
        }
        if label[best] == components {
            diameter = (hi - lo).norm();
        }
        components += 1;
    }
    // exact ties between neighbouring samples around an isolated minimum span a few cells
    let cell = {
        let (i, j) = (best / n2, best % n2);
        let at = |a: usize, b: usize| samples[a * n2 + b].1;
        let d1 = if i + 1 < n1 { (at(i + 1, j) - at(i, j)).norm() } else { (at(i, j) - at(i - 1, j)).norm() };
        let d2 = if j + 1 < n2 || dom.periodic[1] {
            (at(i, (j + 1) % n2) - at(i, j)).norm()
        } else {
            (at(i, j) - at(i, j - 1)).norm()
        };
        d1.max(d2)
    };
    let diameter = (diameter - 3.0 * cell).max(0.0);
    let mut order: Vec<usize> = (0..n1 * n2).filter(|&k| samples[k].0.is_finite()).collect();
    order.sort_by(|&a, &b| samples[a].0.total_cmp(&samples[b].0));
    let lowest = order.iter().take(32).map(|&k| (g1[k / n2], samples[k].0)).collect();
    Scan {
        chart,
        argmin: ChartPoint::new(g1[best / n2], g2[best % n2]),
        value: fmin,
        diameter,
        components,
        lowest,
    }
}

fn chart_value(land: &dyn EnergyLandscape, chart: usize, y: [f64; 2]) -> f64 {
    land.domain(chart)
        .normalize(y.into())
        .and_then(|y| land.sample(chart, y).ok())
        .map_or(f64::INFINITY, |s| s.value)
}

fn hessian_fd(f: &dyn Fn([f64; 2]) -> f64, y: [f64; 2], s: f64) -> (Vector2<f64>, Matrix2<f64>) {
    let at = |a: f64, b: f64| f([y[0] + a * s, y[1] + b * s]);
    let c = at(0.0, 0.0);
    let (p1, m1, p2, m2) = (at(1.0, 0.0), at(-1.0, 0.0), at(0.0, 1.0), at(0.0, -1.0));
    let h12 = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * s * s);
    let grad = Vector2::new((p1 - m1) / (2.0 * s), (p2 - m2) / (2.0 * s));
    let hess = Matrix2::new((p1 - 2.0 * c + m1) / (s * s), h12, h12, (p2 - 2.0 * c + m2) / (s * s));
    (grad, hess)
}

/// G^{-1/2} for a symmetric positive-definite metric.
fn inverse_sqrt(g: &Matrix2<f64>) -> Matrix2<f64> {
    let e = SymmetricEigen::new(*g);
    let d = Matrix2::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt()));
    e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Dense pre-scan on every chart, local simplex refinement, Newton polish and a
/// finite-difference Hessian in a G-orthonormal frame.
pub fn minimize_landscape(land: &dyn EnergyLandscape, options: &EnergyOptions) -> Result<EffectiveBoundaryEnergy> {
    let charts: Vec<usize> = options.charts.clone().unwrap_or_else(|| (0..land.charts()).collect());
    let scans: Vec<Scan> = charts.iter().map(|&c| scan_chart(land, c, options.scan)).collect();
    let best = scans
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::InvalidInput("no chart to scan".into()))?;
    if !best.value.is_finite() {
        return Err(Error::MinimizationAmbiguous {
            message: "no finite sample on the chart scan".into(),
            table: vec![],
        });
    }
    let diameter = scans.iter().map(|s| s.diameter).fold(f64::INFINITY, f64::min);
    let wells = scans.iter().map(|s| s.components).min().unwrap_or(0);

    let start = land.sample(best.chart, best.argmin)?;
    let (chart, y0) = land
        .relocate(&start.point)
        .filter(|(c, _)| charts.contains(c))
        .unwrap_or((best.chart, best.argmin));
    let dom = land.domain(chart);
    let step = ((dom.y1.1 - dom.y1.0) / options.scan[0] as f64).max((dom.y2.1 - dom.y2.0) / options.scan[1] as f64);
    let f = |y: [f64; 2]| chart_value(land, chart, y);
    let ambiguous = |message: &str| Error::MinimizationAmbiguous {
        message: message.into(),
        table: best.lowest.clone(),
    };
    let (mut y, mut fy, _) =
        nelder_mead(f, y0.as_array(), step, options.xtol, 4000).ok_or_else(|| ambiguous("simplex refinement did not converge"))?;
    for _ in 0..6 {
        let (grad, hess) = hessian_fd(&f, y, 1e-5);
        let Some(inv) = hess.try_inverse() else { break };
        if hess.determinant() <= 0.0 || hess[(0, 0)] <= 0.0 {
            break;
        }
        let delta = -inv * grad;
        if delta.norm() > step {
            break;
        }
        let cand = [y[0] + delta[0], y[1] + delta[1]];
        let fc = f(cand);
        if fc <= fy + 1e-15 * fy.abs().max(1.0) {
            y = cand;
            fy = fc;
        } else {
            break;
        }
    }
    if !(fy <= best.value + 1e-12 * best.value.abs().max(1.0)) {
        return Err(ambiguous("refined value exceeds the best scanned sample"));
    }
    let y = dom.normalize(y.into()).ok_or_else(|| ambiguous("refinement left the chart domain"))?;
    let s = land.sample(chart, y)?;
    let (_, hess) = hessian_fd(&f, y.as_array(), HESSIAN_STEP);
    let frame = inverse_sqrt(&s.metric);
    let hessian = frame.transpose() * hess * frame;
    let hessian = 0.5 * (hessian + hessian.transpose());
    let eig = SymmetricEigen::new(hessian).eigenvalues;
    let flat = eig.min() <= 1e-8 * eig.amax().max(f64::MIN_POSITIVE);
    let degenerate = diameter > DIAMETER_FRACTION * land.diameter()
        || s.field_normal.abs() < FIELD_NORMAL_FRACTION * land.field_scale()
        || flat;
    Ok(EffectiveBoundaryEnergy {
        value: s.value,
        minimizer: SurfaceLocation {
            chart,
            y,
            x: [s.point.x, s.point.y, s.point.z],
        },
        hessian,
        degenerate,
        field_normal: s.field_normal,
        level_set_diameter: diameter,
        wells,
    })
}

/// √det(Hess) / (2|B·n(x₀)|) from a minimization of |B·n| − 2κ.
pub fn c0_from_minimum(min: &EffectiveBoundaryEnergy) -> Result<f64> {
    if min.degenerate {
        return Err(Error::AssumptionViolated(format!(
            "minimum is degenerate (level-set diameter {:.3e}, B·n = {:.3e})",
            min.level_set_diameter, min.field_normal
        )));
    }
    let det = min.hessian.determinant();
    if !(det > 0.0 && min.hessian[(0, 0)] > 0.0) {
        return Err(Error::AssumptionViolated(format!(
            "Hessian at the minimum is not positive definite (det {det:e})"
        )));
    }
    Ok(det.sqrt() / (2.0 * min.field_normal.abs()))
}

/// c₀ for the landscape |B·n| − 2κ of a surface.
pub fn c0(surface: &dyn ParamSurface, field: &MagneticField) -> Result<f64> {
    c0_from_minimum(&effective_energy(surface, field, 1.0, 1.0)?)
}

/// Upper bound for |p₂| = |Gaussian curvature| over a chart scan, the constant C* in
/// (1 − 2κt − C*t²)|G|^{1/2} ≤ |g|^{1/2} ≤ (1 − 2κt + C*t²)|G|^{1/2}.
pub fn c_star_bound(surface: &dyn ParamSurface) -> f64 {
    (0..surface.charts())
        .flat_map(|chart| {
            let (g1, g2) = surface.domain(chart).samples(64, 128);
            g1.iter()
                .flat_map(|&a| g2.iter().map(move |&b| ChartPoint::new(a, b)))
                .filter_map(|y| curvature_at(surface, chart, y).ok())
                .map(|c| c.gauss_curvature().abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionSource {
    /// −γ² + ℰ(γ, b) + o(γ^σ), valid for every closed surface.
    Generic,
    /// The σ-regime leading correction of the generic expansion.
    RegimeLeading,
    /// Harmonic approximation at a unique non-degenerate well with B·n ≠ 0 (σ = 1).
    HarmonicWell,
    /// Unit ball with a uniform field (σ = 1).
    UniformBall,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionTerm {
    pub label: String,
    /// `None` for coefficients that are only accessible by fitting.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Expansion {
    pub source: ExpansionSource,
    pub applicable: bool,
    pub note: Option<String>,
    pub terms: Vec<PredictionTerm>,
    pub remainder: String,
}

impl Expansion {
    /// Sum of the terms with known values.
    pub fn known_sum(&self) -> f64 {
        self.terms.iter().filter_map(|t| t.value).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvaluePrediction {
    pub gamma: f64,
    pub sigma: f64,
    pub level: usize,
    pub expansions: Vec<Expansion>,
}

impl EigenvaluePrediction {
    pub fn expansion(&self, source: ExpansionSource) -> Option<&Expansion> {
        self.expansions.iter().find(|e| e.source == source)
    }
}

fn term(label: &str, value: Option<f64>) -> PredictionTerm {
    PredictionTerm {
        label: label.into(),
        value,
    }
}

/// Eigenvalue expansions applicable to (surface, γ^σ B) at level n ≥ 1. Expansions whose
/// hypotheses fail are kept with `applicable = false` and a note.
pub fn predict_eigenvalues(
    surface: &dyn ParamSurface,
    field: &MagneticField,
    gamma: f64,
    sigma: f64,
    level: usize,
    nu0: f64,
) -> EigenvaluePrediction {
    let mut expansions = vec![];
    let lead = -gamma * gamma;
    let sigma_remainder = format!("o(γ^{sigma})");

    let generic = effective_energy(surface, field, gamma, sigma);
    expansions.push(match &generic {
        Ok(e) => Expansion {
            source: ExpansionSource::Generic,
            applicable: level == 1,
            note: (level != 1).then(|| "stated for the principal eigenvalue".into()),
            terms: vec![term("-gamma^2", Some(lead)), term("E(gamma,b)", Some(e.value))],
            remainder: sigma_remainder.clone(),
        },
        Err(err) => Expansion {
            source: ExpansionSource::Generic,
            applicable: false,
            note: Some(err.to_string()),
            terms: vec![term("-gamma^2", Some(lead))],
            remainder: sigma_remainder.clone(),
        },
    });

    let regime = if sigma < 1.0 {
        let no_field = MagneticField::uniform(0.0, 0.0, 0.0);
        let land = SurfaceLandscape {
            surface,
            field: &no_field,
            field_weight: 0.0,
            curvature_weight: 1.0,
        };
        minimize_landscape(&land, &EnergyOptions::default())
            .map(|m| ("-2*gamma*max(kappa)", gamma * m.value, "o(γ)".to_string()))
    } else if sigma > 1.0 {
        let land = SurfaceLandscape {
            surface,
            field,
            field_weight: 1.0,
            curvature_weight: 0.0,
        };
        minimize_landscape(&land, &EnergyOptions::default())
            .map(|m| ("gamma^sigma*min|B.n|", gamma.powf(sigma) * m.value, sigma_remainder.clone()))
    } else {
        effective_energy(surface, field, 1.0, 1.0)
            .map(|m| ("gamma*min(|B.n|-2kappa)", gamma * m.value, "o(γ)".to_string()))
    };
    expansions.push(match regime {
        Ok((label, value, remainder)) => Expansion {
            source: ExpansionSource::RegimeLeading,
            applicable: level == 1,
            note: None,
            terms: vec![term("-gamma^2", Some(lead)), term(label, Some(value))],
            remainder,
        },
        Err(err) => Expansion {
            source: ExpansionSource::RegimeLeading,
            applicable: false,
            note: Some(err.to_string()),
            terms: vec![term("-gamma^2", Some(lead))],
            remainder: sigma_remainder,
        },
    });

    let well = effective_energy(surface, field, 1.0, 1.0)
        .and_then(|m| c0_from_minimum(&m).map(|c| (m.value, c, m.wells)));
    let n = level.max(1) as f64;
    expansions.push(match (sigma == 1.0, well) {
        (true, Ok((value, c0, wells))) => Expansion {
            source: ExpansionSource::HarmonicWell,
            applicable: wells <= 1,
            note: (wells > 1).then(|| format!("minimum attained at {wells} separate wells; the expansion needs a unique one")),
            terms: vec![
                term("-gamma^2", Some(lead)),
                term("gamma*(|B.n(x0)|-2kappa(x0))", Some(gamma * value)),
                term("(2n-1)*c0", Some((2.0 * n - 1.0) * c0)),
                term("c1 (fit-only)", None),
            ],
            remainder: "O(γ^-1/2)".into(),
        },
        (sigma_is_one, well) => Expansion {
            source: ExpansionSource::HarmonicWell,
            applicable: false,
            note: Some(if !sigma_is_one {
                "requires σ = 1".into()
            } else {
                well.err().map(|e| e.to_string()).unwrap_or_default()
            }),
            terms: vec![term("-gamma^2", Some(lead))],
            remainder: "O(γ^-1/2)".into(),
        },
    });

    let ball = match (surface.sphere_radius(), field.as_uniform()) {
        (Some(r), Some(b)) if (r - 1.0).abs() < 1e-14 && sigma == 1.0 => Ok(b.norm()),
        (Some(r), _) if (r - 1.0).abs() >= 1e-14 => Err("requires the unit sphere".to_string()),
        (Some(_), Some(_)) => Err("requires σ = 1".to_string()),
        (Some(_), None) => Err("requires a uniform field".to_string()),
        (None, _) => Err("requires the unit sphere".to_string()),
    };
    expansions.push(match ball {
        Ok(b) => Expansion {
            source: ExpansionSource::UniformBall,
            applicable: level == 1 && b > 0.0,
            note: (b == 0.0).then(|| "requires b > 0".into()),
            terms: vec![
                term("-gamma^2", Some(lead)),
                term("-2*gamma", Some(-2.0 * gamma)),
                term("nu0*b^(4/3)*gamma^(2/3)", Some(nu0 * b.powf(4.0 / 3.0) * gamma.powf(2.0 / 3.0))),
            ],
            remainder: "o(γ^2/3)".into(),
        },
        Err(note) => Expansion {
            source: ExpansionSource::UniformBall,
            applicable: false,
            note: Some(note),
            terms: vec![term("-gamma^2", Some(lead))],
            remainder: "o(γ^2/3)".into(),
        },
    });

    EigenvaluePrediction {
        gamma,
        sigma,
        level,
        expansions,
    }
}

/// Closest boundary point of a query point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Projection {
    pub chart: usize,
    pub y: ChartPoint,
    pub foot: [f64; 3],
    pub distance: f64,
    /// Whether the query point lies on the inner side of the normal.
    pub inside: bool,
}

fn newton_project(surface: &dyn ParamSurface, chart: usize, mut y: ChartPoint, x: &Point3) -> Option<ChartPoint> {
    let dom = surface.domain(chart);
    for _ in 0..60 {
        let jet = surface.jet(chart, y);
        let r = jet.point - x;
        let grad = Vector2::new(r.dot(&jet.d[0]), r.dot(&jet.d[1]));
        let hess = Matrix2::from_fn(|i, j| jet.d[i].dot(&jet.d[j]) + r.dot(&jet.dd[i][j]));
        let scale = jet.d[0].norm().max(jet.d[1].norm()).max(1e-300);
        if grad.norm() <= 1e-14 * scale * r.norm().max(scale) {
            return Some(y);
        }
        let delta = hess.try_inverse().map(|inv| -inv * grad)?;
        y = dom.normalize(ChartPoint::new(y.y1 + delta[0], y.y2 + delta[1]))?;
    }
    None
}

/// Closest-point projection p(x) onto the surface by Newton iteration on charts.
pub fn project_to_surface(surface: &dyn ParamSurface, x: &Point3) -> Result<Projection> {
    let failed = || Error::ProjectionFailed { point: [x.x, x.y, x.z] };
    let mut starts: Vec<(usize, ChartPoint)> = best_chart(surface, x).into_iter().collect();
    if starts.is_empty() {
        for chart in 0..surface.charts() {
            let (g1, g2) = surface.domain(chart).samples(48, 48);
            let nearest = g1
                .iter()
                .flat_map(|&a| g2.iter().map(move |&b| ChartPoint::new(a, b)))
                .min_by(|a, b| {
                    let da = (surface.jet(chart, *a).point - x).norm();
                    let db = (surface.jet(chart, *b).point - x).norm();
                    da.total_cmp(&db)
                });
            starts.extend(nearest.map(|y| (chart, y)));
        }
    }
    let (chart, y) = starts
        .into_iter()
        .filter_map(|(c, y)| newton_project(surface, c, y, x).map(|y| (c, y)))
        .min_by(|a, b| {
            let da = (surface.jet(a.0, a.1).point - x).norm();
            let db = (surface.jet(b.0, b.1).point - x).norm();
            da.total_cmp(&db)
        })
        .ok_or_else(failed)?;
    let foot = surface.jet(chart, y).point;
    // polish in the best-conditioned chart at the foot point
    let (chart, y) = match best_chart(surface, &foot) {
        Some((c, y0)) => newton_project(surface, c, y0, x).map_or((chart, y), |y| (c, y)),
        None => (chart, y),
    };
    let c = curvature_at(surface, chart, y).map_err(|_| failed())?;
    let distance = (c.point - x).norm();
    Ok(Projection {
        chart,
        y,
        foot: [c.point.x, c.point.y, c.point.z],
        distance,
        inside: (x - c.point).dot(&c.normal) <= 0.0,
    })
}

/// U_h(x): −h^{2−2/σ} + |B·n(p)|h − 2κ(p)h^{2−1/σ} − C̃h^{6/5} within distance h^{2/5}
/// of the boundary, 0 further inside.
pub fn localization_potential(
    surface: &dyn ParamSurface,
    field: &MagneticField,
    h: f64,
    sigma: f64,
    x: &Point3,
    c_tilde: f64,
) -> Result<f64> {
    let p = project_to_surface(surface, x)?;
    if p.distance >= h.powf(0.4) {
        return Ok(0.0);
    }
    let c = curvature_at(surface, p.chart, p.y)?;
    let bn = field.at(&c.point).dot(&c.normal).abs();
    Ok(-h.powf(2.0 - 2.0 / sigma) + bn * h - 2.0 * c.kappa * h.powf(2.0 - 1.0 / sigma) - c_tilde * h.powf(1.2))
}
