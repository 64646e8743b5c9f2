use crate::error::{Error, Result};
use crate::fem1d::graded_grid;
use crate::geometry::{best_chart, curvature_from_jet, ChartPoint, MagneticField, ParamSurface, Point3};
use crate::quadrature::Rule;
use nalgebra::Matrix2;
use rayon::prelude::*;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

type PotentialFn = Arc<dyn Fn(&Point3) -> Point3 + Send + Sync>;

/// A vector potential A on ℝ³.
#[derive(Clone)]
pub struct VectorPotential(PotentialFn);

impl fmt::Debug for VectorPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorPotential")
    }
}

impl VectorPotential {
    pub fn new(a: impl Fn(&Point3) -> Point3 + Send + Sync + 'static) -> Self {
        Self(Arc::new(a))
    }

    /// A = ½ B × x, with curl A = B.
    pub fn symmetric(b: Point3) -> Self {
        Self::new(move |x| 0.5 * b.cross(x))
    }

    pub fn at(&self, x: &Point3) -> Point3 {
        (self.0)(x)
    }

    /// A + ∇ψ, given ∇ψ.
    pub fn with_gradient(&self, grad: impl Fn(&Point3) -> Point3 + Send + Sync + 'static) -> Self {
        let base = self.0.clone();
        Self::new(move |x| base(x) + grad(x))
    }

    /// curl A by fourth-order central differences.
    pub fn curl(&self, x: &Point3) -> Point3 {
        let s = 1e-3 * x.norm().max(1.0);
        let mut jac = [[0.0; 3]; 3];
        for (j, col) in jac.iter_mut().enumerate() {
            let e = Point3::ith(j, s);
            let d = (self.at(&(x + e)) - self.at(&(x - e))) * 8.0 - (self.at(&(x + 2.0 * e)) - self.at(&(x - 2.0 * e)));
            for i in 0..3 {
                col[i] = d[i] / (12.0 * s);
            }
        }
        // jac[j][i] = ∂_j A_i
        Point3::new(jac[1][2] - jac[2][1], jac[2][0] - jac[0][2], jac[0][1] - jac[1][0])
    }
}

/// Tangential potential Ã⁰ and normal field 𝔅 = ∂₁Ã⁰₂ − ∂₂Ã⁰₁ at a chart point.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySample {
    pub potential: [f64; 2],
    pub field: f64,
}

/// Boundary data of a chart, available at any chart point (the effective operator
/// needs line integrals of Ã⁰ between nodes and quadrature points).
pub trait BoundaryGauge: Send + Sync {
    fn sample(&self, y: [f64; 2]) -> BoundarySample;
}

type PlanarPotential = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
type PlanarField = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Boundary data given directly in chart coordinates, for synthetic flat charts.
#[derive(Clone)]
pub struct PlanarGauge {
    potential: PlanarPotential,
    field: PlanarField,
}

impl PlanarGauge {
    /// The caller guarantees field = ∂₁A₂ − ∂₂A₁.
    pub fn new(
        potential: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        field: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            potential: Arc::new(potential),
            field: Arc::new(field),
        }
    }

    /// (−b y₂/2, b y₁/2).
    pub fn symmetric(b: f64) -> Self {
        Self::new(move |y| [-0.5 * b * y[1], 0.5 * b * y[0]], move |_| b)
    }

    /// Adds the gradient of a gauge function.
    pub fn with_gradient(&self, grad: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static) -> Self {
        let base = self.potential.clone();
        Self {
            potential: Arc::new(move |y| {
                let a = base(y);
                let g = grad(y);
                [a[0] + g[0], a[1] + g[1]]
            }),
            field: self.field.clone(),
        }
    }
}

impl BoundaryGauge for PlanarGauge {
    fn sample(&self, y: [f64; 2]) -> BoundarySample {
        BoundarySample {
            potential: (self.potential)(y),
            field: (self.field)(y),
        }
    }
}

struct SurfaceGauge {
    surface: Arc<dyn ParamSurface>,
    chart: usize,
    potential: VectorPotential,
    field: MagneticField,
}

impl BoundaryGauge for SurfaceGauge {
    fn sample(&self, y: [f64; 2]) -> BoundarySample {
        let jet = self.surface.jet(self.chart, ChartPoint::from(y));
        let a = self.potential.at(&jet.point);
        let b = self.field.at(&jet.point);
        BoundarySample {
            potential: [jet.d[0].dot(&a), jet.d[1].dot(&a)],
            field: jet.d[0].cross(&jet.d[1]).dot(&b),
        }
    }
}

/// Collar metric g(y′, y₃) = G − 2y₃K + y₃²L at one depth.
#[derive(Debug, Clone, Copy)]
pub struct CollarMetric {
    pub lower: Matrix2<f64>,
    pub upper: Matrix2<f64>,
    pub sqrt_det: f64,
}

/// Surface data at one chart node.
#[derive(Debug, Clone, Copy)]
pub struct NodeFrame {
    pub point: Point3,
    pub tangents: [Point3; 2],
    pub normal: Point3,
    pub normal_derivatives: [Point3; 2],
    pub first: Matrix2<f64>,
    pub second: Matrix2<f64>,
    pub third: Matrix2<f64>,
    /// |G|^{1/2}
    pub area: f64,
    pub kappa: f64,
    /// Ã⁰
    pub potential: [f64; 2],
    /// 𝔅 = ∂₁Ã⁰₂ − ∂₂Ã⁰₁
    pub field: f64,
}

impl NodeFrame {
    fn flat(y: [f64; 2], gauge: &dyn BoundaryGauge) -> Self {
        let s = gauge.sample(y);
        Self {
            point: Point3::new(y[0], y[1], 0.0),
            tangents: [Point3::x(), Point3::y()],
            normal: Point3::z(),
            normal_derivatives: [Point3::zeros(); 2],
            first: Matrix2::identity(),
            second: Matrix2::zeros(),
            third: Matrix2::zeros(),
            area: 1.0,
            kappa: 0.0,
            potential: s.potential,
            field: s.field,
        }
    }

    pub fn metric(&self, y3: f64) -> CollarMetric {
        let lower = self.first - 2.0 * y3 * self.second + y3 * y3 * self.third;
        let det = lower.determinant();
        let upper = Matrix2::new(lower[(1, 1)], -lower[(0, 1)], -lower[(1, 0)], lower[(0, 0)]) / det;
        CollarMetric {
            lower,
            upper,
            sqrt_det: det.max(0.0).sqrt(),
        }
    }

    /// ⟨B, n⟩ = 𝔅 / |G|^{1/2}.
    pub fn normal_field(&self) -> f64 {
        self.field / self.area
    }

    /// ∂_y₃ Ã_k in the normal gauge: ⟨−n × ∂_kΦ̃, B(Φ̃)⟩.
    fn potential_rate(&self, y3: f64, field: &MagneticField) -> [f64; 2] {
        let b = field.at(&(self.point - y3 * self.normal));
        [0, 1].map(|k| {
            let dk = self.tangents[k] - y3 * self.normal_derivatives[k];
            (-self.normal).cross(&dk).dot(&b)
        })
    }
}

/// Chart size and resolution.
#[derive(Debug, Clone, Copy)]
pub struct ChartSpec {
    pub half_widths: [f64; 2],
    pub cells: [usize; 2],
    /// Collar depth; `None` takes min(0.3 / max|κ|, 0.3).
    pub delta: Option<f64>,
    pub transverse_cells: usize,
    /// First transverse cell, in units of t = y₃/h.
    pub transverse_first_cell: f64,
}

impl Default for ChartSpec {
    fn default() -> Self {
        Self {
            half_widths: [0.3, 0.3],
            cells: [24, 24],
            delta: None,
            transverse_cells: 400,
            transverse_first_cell: 2e-3,
        }
    }
}

/// Tensor samples of the collar geometry and the normal-gauge potential over a chart.
///
/// Nodes are indexed by domain vertex (i, j) with 0 ≤ i ≤ cells[0]; one ghost layer on
/// each side is kept for centred differences of the transverse modes.
#[derive(Clone)]
pub struct ChartData {
    h: f64,
    delta: f64,
    chart: Option<usize>,
    cells: [usize; 2],
    lines: [Vec<f64>; 2],
    t: Vec<f64>,
    frames: Vec<NodeFrame>,
    /// Ã(y′, t) − Ã⁰(y′), node-major with t inner.
    deviation: Vec<[f64; 2]>,
    gauge: Arc<dyn BoundaryGauge>,
}

impl fmt::Debug for ChartData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartData")
            .field("h", &self.h)
            .field("delta", &self.delta)
            .field("chart", &self.chart)
            .field("cells", &self.cells)
            .field("transverse_nodes", &self.t.len())
            .finish()
    }
}

fn check_resolution(h: f64, spec: &ChartSpec) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidInput(format!("h = {h} must lie in (0, 1)")));
    }
    if spec.cells.iter().any(|&c| c < 4) || spec.half_widths.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidInput("chart needs at least 4 cells per axis and positive half-widths".into()));
    }
    if spec.transverse_cells < 16 || !(spec.transverse_first_cell > 0.0) {
        return Err(Error::InvalidInput("transverse grid needs ≥ 16 cells and a positive first cell".into()));
    }
    Ok(())
}

fn axis_lines(center: f64, half_width: f64, cells: usize) -> Vec<f64> {
    let step = 2.0 * half_width / cells as f64;
    (-1..=cells as isize + 1)
        .map(|k| center - half_width + k as f64 * step)
        .collect()
}

impl ChartData {
    /// A flat chart: g ≡ Id, K = L = 0, with boundary data from `gauge` and Ã t-independent.
    pub fn flat(h: f64, spec: &ChartSpec, gauge: Arc<dyn BoundaryGauge>) -> Result<Self> {
        check_resolution(h, spec)?;
        let delta = spec.delta.unwrap_or(0.3);
        let lines = [0, 1].map(|k| axis_lines(0.0, spec.half_widths[k], spec.cells[k]));
        let mut frames = Vec::with_capacity(lines[0].len() * lines[1].len());
        for &y2 in &lines[1] {
            for &y1 in &lines[0] {
                frames.push(NodeFrame::flat([y1, y2], gauge.as_ref()));
            }
        }
        let t = graded_grid(delta / h, spec.transverse_cells, spec.transverse_first_cell);
        let deviation = vec![[0.0; 2]; frames.len() * t.len()];
        Ok(Self {
            h,
            delta,
            chart: None,
            cells: spec.cells,
            lines,
            t,
            frames,
            deviation,
            gauge,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn chart(&self) -> Option<usize> {
        self.chart
    }

    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    pub fn spacing(&self) -> [f64; 2] {
        [0, 1].map(|k| self.lines[k][1] - self.lines[k][0])
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn gauge(&self) -> &dyn BoundaryGauge {
        self.gauge.as_ref()
    }

    /// Number of domain vertices, (cells[0] + 1)(cells[1] + 1).
    pub fn vertex_count(&self) -> usize {
        (self.cells[0] + 1) * (self.cells[1] + 1)
    }

    /// Chart coordinates of domain vertex (i, j).
    pub fn coordinate(&self, i: usize, j: usize) -> [f64; 2] {
        [self.lines[0][i + 1], self.lines[1][j + 1]]
    }

    pub(crate) fn slot(&self, i: isize, j: isize) -> usize {
        ((i + 1) + (self.cells[0] as isize + 3) * (j + 1)) as usize
    }

    pub(crate) fn frame_at(&self, i: isize, j: isize) -> &NodeFrame {
        &self.frames[self.slot(i, j)]
    }

    pub fn frame(&self, i: usize, j: usize) -> &NodeFrame {
        self.frame_at(i as isize, j as isize)
    }

    pub(crate) fn deviation_at(&self, i: isize, j: isize) -> &[[f64; 2]] {
        let nt = self.t.len();
        let s = self.slot(i, j) * nt;
        &self.deviation[s..s + nt]
    }

    /// Ã_k(y′, t) at domain vertex (i, j) and transverse node `ti`; Ã₃ ≡ 0.
    pub fn tangential_potential(&self, i: usize, j: usize, ti: usize) -> [f64; 2] {
        let f = self.frame(i, j);
        let d = self.deviation_at(i as isize, j as isize)[ti];
        [f.potential[0] + d[0], f.potential[1] + d[1]]
    }

    pub fn metric(&self, i: usize, j: usize, ti: usize) -> CollarMetric {
        self.frame(i, j).metric(self.h * self.t[ti])
    }

    /// ⟨B, n⟩ at a chart point from 𝔅 = ∂₁Ã⁰₂ − ∂₂Ã⁰₁, with the derivatives of Ã⁰ taken by
    /// fourth-order differences of the boundary gauge.
    pub fn normal_field_from_potential(&self, i: usize, j: usize) -> f64 {
        let y = self.coordinate(i, j);
        let s = 1e-3 * self.spacing()[0].min(self.spacing()[1]).max(1e-3);
        let d = |k: usize, comp: usize| {
            let at = |m: f64| {
                let mut p = y;
                p[k] += m * s;
                self.gauge.sample(p).potential[comp]
            };
            (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * s)
        };
        (d(0, 1) - d(1, 0)) / self.frame(i, j).area
    }

    /// Writes one row per domain vertex and transverse node: y₁ y₂ t g₁₁ g₁₂ g₂₂ Ã₁ Ã₂.
    pub fn write_table(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "# y1 y2 t g11 g12 g22 A1 A2")?;
        for j in 0..=self.cells[1] {
            for i in 0..=self.cells[0] {
                let y = self.coordinate(i, j);
                for (ti, &t) in self.t.iter().enumerate() {
                    let g = self.metric(i, j, ti).lower;
                    let a = self.tangential_potential(i, j, ti);
                    writeln!(
                        out,
                        "{:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e}",
                        y[0],
                        y[1],
                        t,
                        g[(0, 0)],
                        g[(0, 1)],
                        g[(1, 1)],
                        a[0],
                        a[1]
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Builds a boundary chart centred at the surface point nearest `center` in its best chart.
pub fn build_chart(
    surface: Arc<dyn ParamSurface>,
    center: &Point3,
    potential: &VectorPotential,
    field: &MagneticField,
    h: f64,
    spec: &ChartSpec,
) -> Result<ChartData> {
    check_resolution(h, spec)?;
    let (chart, y0) = best_chart(surface.as_ref(), center)
        .ok_or_else(|| Error::InvalidInput(format!("no chart locates the centre {:?}", center.as_slice())))?;
    let domain = surface.domain(chart);
    let lines = [
        axis_lines(y0.y1, spec.half_widths[0], spec.cells[0]),
        axis_lines(y0.y2, spec.half_widths[1], spec.cells[1]),
    ];
    for (k, (range, periodic)) in [(domain.y1, domain.periodic[0]), (domain.y2, domain.periodic[1])]
        .into_iter()
        .enumerate()
    {
        let (lo, hi) = (lines[k][0], *lines[k].last().expect("non-empty"));
        if !periodic && !(lo > range.0 && hi < range.1) {
            return Err(Error::InvalidInput(format!(
                "chart axis {} spans [{lo}, {hi}] outside the parameter domain ({}, {})",
                k + 1,
                range.0,
                range.1
            )));
        }
    }

    let gauge = Arc::new(SurfaceGauge {
        surface: surface.clone(),
        chart,
        potential: potential.clone(),
        field: field.clone(),
    });
    let coords: Vec<[f64; 2]> = lines[1]
        .iter()
        .flat_map(|&y2| lines[0].iter().map(move |&y1| [y1, y2]))
        .collect();
    let frames = coords
        .par_iter()
        .map(|&y| {
            let jet = surface.jet(chart, ChartPoint::from(y));
            let c = curvature_from_jet(&jet, ChartPoint::from(y))?;
            let s = gauge.sample(y);
            Ok(NodeFrame {
                point: jet.point,
                tangents: jet.d,
                normal: c.normal,
                normal_derivatives: c.normal_derivatives,
                first: c.first,
                second: c.second,
                third: c.third,
                area: c.first.determinant().sqrt(),
                kappa: c.kappa,
                potential: s.potential,
                field: s.field,
            })
        })
        .collect::<Result<Vec<NodeFrame>>>()?;

    let max_kappa = frames.iter().map(|f| f.kappa.abs()).fold(0.0, f64::max);
    let delta = spec
        .delta
        .unwrap_or_else(|| if max_kappa > 0.0 { (0.3 / max_kappa).min(0.3) } else { 0.3 });
    if !(delta > 0.0) || delta * max_kappa >= 0.5 {
        return Err(Error::CollarTooDeep {
            delta,
            max_curvature: max_kappa,
        });
    }
    // the mean-curvature bound does not exclude a focal point of one principal direction
    if frames.iter().any(|f| !(f.metric(delta).sqrt_det > 1e-12 * f.area)) {
        return Err(Error::CollarTooDeep {
            delta,
            max_curvature: max_kappa,
        });
    }

    let stride = spec.cells[0] + 3;
    let probes = [
        (spec.cells[0] / 2 + 1, spec.cells[1] / 2 + 1),
        (1, 1),
        (spec.cells[0] + 1, 1),
        (1, spec.cells[1] + 1),
        (spec.cells[0] + 1, spec.cells[1] + 1),
    ];
    let mut mismatch = 0.0f64;
    for (i, j) in probes {
        let f = &frames[i + stride * j];
        for depth in [0.0, 0.5 * delta] {
            let x = f.point - depth * f.normal;
            let b = field.at(&x);
            mismatch = mismatch.max((potential.curl(&x) - b).norm() / b.norm().max(1.0));
        }
    }
    if mismatch > 1e-8 {
        return Err(Error::PotentialInconsistent { mismatch });
    }

    let t = graded_grid(delta / h, spec.transverse_cells, spec.transverse_first_cell);
    let rule = Rule::gauss(3, 0.0, 1.0);
    let deviation: Vec<[f64; 2]> = frames
        .par_iter()
        .flat_map_iter(|frame| {
            let mut acc = [0.0; 2];
            let mut out = Vec::with_capacity(t.len());
            out.push(acc);
            for w in t.windows(2) {
                let (a, b) = (h * w[0], h * w[1]);
                for (&s, &wt) in rule.nodes.iter().zip(&rule.weights) {
                    let r = frame.potential_rate(a + s * (b - a), field);
                    acc[0] += wt * (b - a) * r[0];
                    acc[1] += wt * (b - a) * r[1];
                }
                out.push(acc);
            }
            out
        })
        .collect();

    Ok(ChartData {
        h,
        delta,
        chart: Some(chart),
        cells: spec.cells,
        lines,
        t,
        frames,
        deviation,
        gauge,
    })
}
