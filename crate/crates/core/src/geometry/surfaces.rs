//! Built-in surfaces: ellipsoids (and spheres), a flat patch, user callbacks and tabulated charts.

use super::{ChartDomain, ChartPoint, Jet, ParamSurface, Point3};
use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::Arc;

/// Ellipsoid x²/a² + y²/b² + z²/c² = 1 (shifted by `center`), with two polar charts:
/// chart 0 about the z axis, (a sinθ cosφ, b sinθ sinφ, c cosθ), and chart 1 about
/// the x axis, (a cosθ, b sinθ cosφ, c sinθ sinφ).
#[derive(Debug, Clone, Copy)]
pub struct Ellipsoid {
    axes: [f64; 3],
    center: [f64; 3],
}

impl Ellipsoid {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        assert!(a > 0.0 && b > 0.0 && c > 0.0, "ellipsoid semi-axes must be positive");
        Self {
            axes: [a, b, c],
            center: [0.0; 3],
        }
    }

    pub fn sphere(r: f64) -> Self {
        Self::new(r, r, r)
    }

    pub fn with_center(mut self, center: [f64; 3]) -> Self {
        self.center = center;
        self
    }

    pub fn axes(&self) -> [f64; 3] {
        self.axes
    }

    fn permute(chart: usize, v: [f64; 3]) -> Point3 {
        match chart {
            0 => Point3::new(v[0], v[1], v[2]),
            _ => Point3::new(v[2], v[0], v[1]),
        }
    }

    fn scale(&self, v: Point3) -> Point3 {
        Point3::new(self.axes[0] * v.x, self.axes[1] * v.y, self.axes[2] * v.z)
    }
}

impl ParamSurface for Ellipsoid {
    fn charts(&self) -> usize {
        2
    }

    fn domain(&self, _chart: usize) -> ChartDomain {
        ChartDomain {
            y1: (0.0, PI),
            y2: (-PI, PI),
            periodic: [false, true],
        }
    }

    fn jet(&self, chart: usize, y: ChartPoint) -> Jet {
        let (st, ct) = y.y1.sin_cos();
        let (sp, cp) = y.y2.sin_cos();
        let map = |v: [f64; 3]| self.scale(Self::permute(chart, v));
        let center = Point3::from(self.center);
        Jet {
            point: center + map([st * cp, st * sp, ct]),
            d: [map([ct * cp, ct * sp, -st]), map([-st * sp, st * cp, 0.0])],
            dd: [
                [map([-st * cp, -st * sp, -ct]), map([-ct * sp, ct * cp, 0.0])],
                [map([-ct * sp, ct * cp, 0.0]), map([-st * cp, -st * sp, 0.0])],
            ],
        }
    }

    fn locate(&self, chart: usize, x: &Point3) -> Option<ChartPoint> {
        let rel = x - Point3::from(self.center);
        let u = Point3::new(rel.x / self.axes[0], rel.y / self.axes[1], rel.z / self.axes[2]);
        let norm = u.norm();
        if norm == 0.0 {
            return None;
        }
        let u = u / norm;
        let (polar, e1, e2) = match chart {
            0 => (u.z, u.x, u.y),
            _ => (u.x, u.y, u.z),
        };
        Some(ChartPoint::new(polar.clamp(-1.0, 1.0).acos(), e2.atan2(e1)))
    }

    fn center(&self) -> Option<Point3> {
        Some(Point3::from(self.center))
    }

    fn diameter(&self) -> f64 {
        2.0 * self.axes.iter().cloned().fold(0.0, f64::max)
    }

    fn sphere_radius(&self) -> Option<f64> {
        let [a, b, c] = self.axes;
        (a == b && b == c).then_some(a)
    }
}

/// The flat patch (y₁, y₂, 0) on [−L, L]², normal +e₃. Not closed; used for flat charts.
#[derive(Debug, Clone, Copy)]
pub struct PlanePatch {
    pub half_width: f64,
}

impl ParamSurface for PlanePatch {
    fn charts(&self) -> usize {
        1
    }

    fn domain(&self, _chart: usize) -> ChartDomain {
        ChartDomain {
            y1: (-self.half_width, self.half_width),
            y2: (-self.half_width, self.half_width),
            periodic: [false, false],
        }
    }

    fn jet(&self, _chart: usize, y: ChartPoint) -> Jet {
        let zero = Point3::zeros();
        Jet {
            point: Point3::new(y.y1, y.y2, 0.0),
            d: [Point3::x(), Point3::y()],
            dd: [[zero; 2]; 2],
        }
    }

    fn locate(&self, _chart: usize, x: &Point3) -> Option<ChartPoint> {
        Some(ChartPoint::new(x.x, x.y))
    }

    fn diameter(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 * self.half_width
    }

    fn closed(&self) -> bool {
        false
    }
}

pub type ChartFn = Arc<dyn Fn(ChartPoint) -> Point3 + Send + Sync>;

/// A single-chart surface given by a position callback; derivatives by central differences.
#[derive(Clone)]
pub struct CallbackSurface {
    map: ChartFn,
    domain: ChartDomain,
    step: f64,
    center: Option<Point3>,
    diameter: f64,
}

impl CallbackSurface {
    pub fn new(map: ChartFn, domain: ChartDomain) -> Self {
        let (g1, g2) = domain.samples(24, 24);
        let pts: Vec<Point3> = g1
            .iter()
            .flat_map(|&a| g2.iter().map(move |&b| ChartPoint::new(a, b)))
            .map(|y| map(y))
            .collect();
        let diameter = bounding_diagonal(&pts);
        Self {
            map,
            domain,
            step: 2e-4,
            center: None,
            diameter,
        }
    }

    /// Finite-difference step in chart units.
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_center(mut self, center: Point3) -> Self {
        self.center = Some(center);
        self
    }
}

impl ParamSurface for CallbackSurface {
    fn charts(&self) -> usize {
        1
    }

    fn domain(&self, _chart: usize) -> ChartDomain {
        self.domain
    }

    fn jet(&self, _chart: usize, y: ChartPoint) -> Jet {
        let s = self.step;
        let f = |a: f64, b: f64| (self.map)(ChartPoint::new(y.y1 + a * s, y.y2 + b * s));
        let c = f(0.0, 0.0);
        let (p1, m1, p2, m2) = (f(1.0, 0.0), f(-1.0, 0.0), f(0.0, 1.0), f(0.0, -1.0));
        let d12 = (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * s * s);
        Jet {
            point: c,
            d: [(p1 - m1) / (2.0 * s), (p2 - m2) / (2.0 * s)],
            dd: [
                [(p1 - 2.0 * c + m1) / (s * s), d12],
                [d12, (p2 - 2.0 * c + m2) / (s * s)],
            ],
        }
    }

    fn center(&self) -> Option<Point3> {
        self.center
    }

    fn diameter(&self) -> f64 {
        self.diameter
    }
}

fn bounding_diagonal(pts: &[Point3]) -> f64 {
    let mut lo = Point3::repeat(f64::INFINITY);
    let mut hi = Point3::repeat(f64::NEG_INFINITY);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

/// Second derivatives of the natural cubic spline through (x, y).
fn natural_spline(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        diag[i] = (h0 + h1) / 3.0;
        upper[i] = h1 / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    for i in 2..n - 1 {
        let lower = (x[i] - x[i - 1]) / 6.0;
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        m[i] = (rhs[i] - if i + 1 < n - 1 { upper[i] * m[i + 1] } else { 0.0 }) / diag[i];
    }
    m
}

/// Value, first and second derivative of a cubic spline at t.
fn spline_eval(x: &[f64], y: &[f64], m: &[f64], t: f64) -> [f64; 3] {
    let n = x.len();
    let i = match x.partition_point(|&v| v <= t) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    };
    let h = x[i + 1] - x[i];
    let a = (x[i + 1] - t) / h;
    let b = (t - x[i]) / h;
    let value = a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
    let slope = (y[i + 1] - y[i]) / h - (3.0 * a * a - 1.0) * h * m[i] / 6.0 + (3.0 * b * b - 1.0) * h * m[i + 1] / 6.0;
    let curvature = a * m[i] + b * m[i + 1];
    [value, slope, curvature]
}

/// A chart given by samples (y₁, y₂) ↦ (x, y, z) on a tensor grid, interpolated by
/// tensor-product natural cubic splines.
///
/// File layout: a header line `n1 n2`, then n1·n2 rows `y1 y2 x y z` with y₁ in the
/// outer loop. Lines starting with `#` are ignored.
#[derive(Debug, Clone)]
pub struct TabulatedSurface {
    y1: Vec<f64>,
    y2: Vec<f64>,
    coords: [Vec<f64>; 3],
    row_curvature: [Vec<f64>; 3],
    diameter: f64,
    closed: bool,
}

impl TabulatedSurface {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let bad = |msg: String| Error::InvalidInput(format!("tabulated chart: {msg}"));
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing header".into()))?
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| bad(format!("header: {e}"))))
            .collect::<Result<_>>()?;
        let [n1, n2] = header[..] else {
            return Err(bad("header must be `n1 n2`".into()));
        };
        if n1 < 4 || n2 < 4 {
            return Err(bad("need at least 4 samples per direction".into()));
        }
        let mut y1 = Vec::with_capacity(n1);
        let mut y2 = Vec::with_capacity(n2);
        let mut coords = [vec![], vec![], vec![]];
        for i in 0..n1 {
            for j in 0..n2 {
                let row: Vec<f64> = lines
                    .next()
                    .ok_or_else(|| bad(format!("expected {} rows", n1 * n2)))?
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i * n2 + j))))
                    .collect::<Result<_>>()?;
                if row.len() != 5 || row.iter().any(|v| !v.is_finite()) {
                    return Err(bad(format!("row {} must hold 5 finite numbers", i * n2 + j)));
                }
                if j == 0 {
                    y1.push(row[0]);
                } else if row[0] != y1[i] {
                    return Err(bad(format!("y1 varies inside block {i}")));
                }
                if i == 0 {
                    y2.push(row[1]);
                } else if row[1] != y2[j] {
                    return Err(bad(format!("y2 grid differs in block {i}")));
                }
                for k in 0..3 {
                    coords[k].push(row[2 + k]);
                }
            }
        }
        if y1.windows(2).any(|w| w[1] <= w[0]) || y2.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("chart grids must increase strictly".into()));
        }
        Ok(Self::from_samples(y1, y2, coords))
    }

    pub fn from_samples(y1: Vec<f64>, y2: Vec<f64>, coords: [Vec<f64>; 3]) -> Self {
        let n2 = y2.len();
        let row_curvature = [0, 1, 2].map(|k| {
            coords[k]
                .chunks(n2)
                .flat_map(|row| natural_spline(&y2, row))
                .collect::<Vec<_>>()
        });
        let pts: Vec<Point3> = (0..coords[0].len())
            .map(|i| Point3::new(coords[0][i], coords[1][i], coords[2][i]))
            .collect();
        Self {
            diameter: bounding_diagonal(&pts),
            y1,
            y2,
            coords,
            row_curvature,
            closed: false,
        }
    }

    /// Marks the chart as covering a closed surface (up to its singular edges).
    pub fn closed_surface(mut self) -> Self {
        self.closed = true;
        self
    }

    /// Serializes samples in the documented layout.
    pub fn write_samples(y1: &[f64], y2: &[f64], map: impl Fn(f64, f64) -> Point3) -> String {
        let mut out = format!("{} {}\n", y1.len(), y2.len());
        for &a in y1 {
            for &b in y2 {
                let p = map(a, b);
                out.push_str(&format!("{a:.17e} {b:.17e} {:.17e} {:.17e} {:.17e}\n", p.x, p.y, p.z));
            }
        }
        out
    }
}

impl ParamSurface for TabulatedSurface {
    fn charts(&self) -> usize {
        1
    }

    fn domain(&self, _chart: usize) -> ChartDomain {
        ChartDomain {
            y1: (self.y1[0], *self.y1.last().unwrap()),
            y2: (self.y2[0], *self.y2.last().unwrap()),
            periodic: [false, false],
        }
    }

    fn jet(&self, _chart: usize, y: ChartPoint) -> Jet {
        let n2 = self.y2.len();
        let mut out = [[0.0f64; 6]; 3];
        for k in 0..3 {
            let mut along = [vec![], vec![], vec![]];
            for (row, m) in self.coords[k].chunks(n2).zip(self.row_curvature[k].chunks(n2)) {
                let r = spline_eval(&self.y2, row, m, y.y2);
                for q in 0..3 {
                    along[q].push(r[q]);
                }
            }
            let eval = |vals: &Vec<f64>| spline_eval(&self.y1, vals, &natural_spline(&self.y1, vals), y.y1);
            let [v, d1, d11] = eval(&along[0]);
            let [d2, d12, _] = eval(&along[1]);
            let [d22, _, _] = eval(&along[2]);
            out[k] = [v, d1, d2, d11, d12, d22];
        }
        let pick = |q: usize| Point3::new(out[0][q], out[1][q], out[2][q]);
        Jet {
            point: pick(0),
            d: [pick(1), pick(2)],
            dd: [[pick(3), pick(4)], [pick(4), pick(5)]],
        }
    }

    fn diameter(&self) -> f64 {
        self.diameter
    }

    fn closed(&self) -> bool {
        self.closed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::curvature_at;

    #[test]
    fn ellipsoid_locate_inverts_both_charts() {
        let e = Ellipsoid::new(1.0, 1.1, 1.3).with_center([0.2, -0.1, 0.4]);
        for chart in 0..2 {
            let y = ChartPoint::new(1.1, -0.7);
            let x = e.jet(chart, y).point;
            let back = e.locate(chart, &x).unwrap();
            assert!((back.y1 - y.y1).abs() < 1e-12 && (back.y2 - y.y2).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_reproduces_cubic() {
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.0 * t - 0.5).collect();
        let m = natural_spline(&x, &y);
        let [v, d, dd] = spline_eval(&x, &y, &m, 1.37);
        assert!((v - (2.0 * 1.37 - 0.5)).abs() < 1e-13);
        assert!((d - 2.0).abs() < 1e-13 && dd.abs() < 1e-12);
    }

    #[test]
    fn callback_sphere_matches_analytic() {
        let map: ChartFn = Arc::new(|y: ChartPoint| {
            Point3::new(y.y1.sin() * y.y2.cos(), y.y1.sin() * y.y2.sin(), y.y1.cos())
        });
        let dom = Ellipsoid::sphere(1.0).domain(0);
        let s = CallbackSurface::new(map, dom);
        let c = curvature_at(&s, 0, ChartPoint::new(1.0, 0.5)).unwrap();
        assert!((c.kappa - 1.0).abs() < 1e-6, "{}", c.kappa);
    }

    #[test]
    fn tabulated_sphere_band_curvature() {
        let y1: Vec<f64> = (0..81).map(|i| 0.5 + i as f64 * (2.14 / 80.0)).collect();
        let y2: Vec<f64> = (0..81).map(|i| -1.0 + i as f64 * (2.0 / 80.0)).collect();
        let text = TabulatedSurface::write_samples(&y1, &y2, |a, b| {
            Point3::new(a.sin() * b.cos(), a.sin() * b.sin(), a.cos())
        });
        let s = TabulatedSurface::parse(&text).unwrap();
        let c = curvature_at(&s, 0, ChartPoint::new(1.3, 0.1)).unwrap();
        assert!((c.kappa - 1.0).abs() < 1e-4, "{}", c.kappa);
    }

    #[test]
    fn tabulated_rejects_bad_layout() {
        assert!(TabulatedSurface::parse("3\n").is_err());
        assert!(TabulatedSurface::parse("4 4\n0 0 0 0 0\n").is_err());
    }
}
