//! Unit ball with a uniform axial field, solved one Fourier mode at a time.
//!
//! After the φ-Fourier reduction every per-mode form on the (r, θ) half-disc is a
//! sum of products of one-dimensional radial and angular forms, so assembly is a
//! short list of Kronecker products. The radial factor is either the full graded
//! P1 space or a reduced basis of the lowest radial modes of the θ = π/2 slice;
//! the angular factor is P1 on the poles plus cell centres.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::asymfit::{fit_expansion, FitReport};
use crate::eigsolve::{solve_sparse, solve_tridiagonal, SparseSym, Spectrum, SymmetricOperatorPair, TripletBuilder};
use crate::fem1d::{self, Tri};
use crate::model1d::{montgomery_state, MontgomeryGrid, MontgomeryMinimum};
use crate::quadrature::Rule;
use crate::{Error, Result};

/// Which scaling of the spherical form is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Field and curvature enter at the same order: boundary term −h, potential
    /// (hm/(r sinθ) − b r sinθ/2)².
    Critical,
    /// Boundary term −h^{3/2} and potential h² r⁻² (m/sinθ − b r²/2)².
    HBounded,
}

impl Regime {
    pub fn boundary_exponent(self) -> f64 {
        match self {
            Regime::Critical => 1.0,
            Regime::HBounded => 1.5,
        }
    }

    /// Default truncation exponent: inner radius 1 − h^ρ.
    pub fn default_rho(self) -> f64 {
        match self {
            Regime::Critical => 0.4,
            Regime::HBounded => 0.02,
        }
    }

    /// Decay length of the boundary layer.
    pub fn layer_width(self, h: f64) -> f64 {
        match self {
            Regime::Critical => h,
            Regime::HBounded => h.sqrt(),
        }
    }

    pub fn fit_exponents(self) -> [f64; 3] {
        match self {
            Regime::Critical => [0.0, 1.0, 4.0 / 3.0],
            Regime::HBounded => [1.0, 1.5, 2.0],
        }
    }
}

/// Discretization of one mode problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallGrid {
    pub radial_cells: usize,
    /// Radial cell at r = 1 relative to the layer width.
    pub first_cell: f64,
    /// `None` keeps the whole radial P1 space; `Some(k)` projects onto k slice modes.
    pub radial_modes: Option<usize>,
    pub theta_cells: usize,
}

impl BallGrid {
    pub fn for_regime(regime: Regime) -> Self {
        Self {
            radial_cells: 3000,
            first_cell: 1e-3,
            radial_modes: Some(6),
            theta_cells: match regime {
                Regime::Critical => 1024,
                Regime::HBounded => 512,
            },
        }
    }

    pub fn describe(&self) -> String {
        match self.radial_modes {
            Some(k) => format!(
                "r: {} graded cells reduced to {k} modes; theta: {} cells",
                self.radial_cells, self.theta_cells
            ),
            None => format!("r: {} graded cells; theta: {} cells", self.radial_cells, self.theta_cells),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BallProblem {
    pub h: f64,
    pub b: f64,
    pub regime: Regime,
    pub rho: f64,
    pub grid: BallGrid,
}

impl BallProblem {
    pub fn new(regime: Regime, h: f64, b: f64) -> Result<Self> {
        Self {
            h,
            b,
            regime,
            rho: regime.default_rho(),
            grid: BallGrid::for_regime(regime),
        }
        .validated()
    }

    pub fn critical(h: f64, b: f64) -> Result<Self> {
        Self::new(Regime::Critical, h, b)
    }

    pub fn h_bounded(h: f64, b: f64) -> Result<Self> {
        Self::new(Regime::HBounded, h, b)
    }

    pub fn with_grid(mut self, grid: BallGrid) -> Result<Self> {
        self.grid = grid;
        self.validated()
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        self.rho = rho;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(Error::InvalidInput(format!("h = {} must lie in (0, 1)", self.h)));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidInput(format!("b = {} must be finite and ≥ 0", self.b)));
        }
        if !(self.rho > 0.0) {
            return Err(Error::InvalidInput(format!("truncation exponent {} must be > 0", self.rho)));
        }
        let g = &self.grid;
        if g.radial_cells < 8 || g.theta_cells < 8 || !(g.first_cell > 0.0) {
            return Err(Error::Grid(format!("ball grid too coarse: {g:?}")));
        }
        if g.radial_modes == Some(0) || g.radial_modes.is_some_and(|k| k > g.radial_cells) {
            return Err(Error::Grid("reduced radial basis must have between 1 and radial_cells modes".into()));
        }
        let r0 = self.inner_radius();
        if !(r0 > 0.0 && r0 < 1.0) {
            return Err(Error::Grid(format!("inner radius {r0} outside (0, 1)")));
        }
        Ok(self)
    }

    pub fn inner_radius(&self) -> f64 {
        1.0 - self.h.powf(self.rho)
    }

    pub fn boundary_exponent(&self) -> f64 {
        self.regime.boundary_exponent()
    }

    /// Per-mode potential times r² sinθ as Σ c · r^p · w(θ).
    fn potential_terms(&self, m: i64) -> [(f64, i32, AngularWeight); 3] {
        let (h, b, m) = (self.h, self.b, m as f64);
        match self.regime {
            Regime::Critical => [
                (h * h * m * m, 0, AngularWeight::InvSin),
                (-h * m * b, 2, AngularWeight::Sin),
                (0.25 * b * b, 4, AngularWeight::Sin3),
            ],
            Regime::HBounded => [
                (h * h * m * m, 0, AngularWeight::InvSin),
                (-h * h * m * b, 2, AngularWeight::One),
                (0.25 * h * h * b * b, 4, AngularWeight::Sin),
            ],
        }
    }

    /// sup of the per-mode magnetic potential at m = 0, the scaled sup|A|².
    pub fn potential_sup(&self) -> f64 {
        match self.regime {
            Regime::Critical => 0.25 * self.b * self.b,
            Regime::HBounded => 0.25 * self.h * self.h * self.b * self.b,
        }
    }

    /// Infimum of the per-mode potential over the shell; added to the radial floor
    /// it bounds the mode spectrum from below.
    pub fn potential_floor(&self, m: i64) -> f64 {
        let (h, b) = (self.h, self.b);
        let mf = m as f64;
        match self.regime {
            Regime::Critical => {
                // (hm/x − bx/2)² over x = r sinθ ∈ (0, 1]
                let a = h * mf.abs();
                if m <= 0 {
                    if b > 0.0 && 2.0 * a <= b {
                        2.0 * a * b
                    } else {
                        (a + 0.5 * b).powi(2)
                    }
                } else if a <= 0.5 * b {
                    0.0
                } else {
                    (a - 0.5 * b).powi(2)
                }
            }
            Regime::HBounded => {
                if m <= 0 {
                    h * h * mf * mf
                } else {
                    h * h * (mf - 0.5 * b).max(0.0).powi(2)
                }
            }
        }
    }

    /// Mode at which the field term is expected to be smallest.
    pub fn predicted_mode(&self) -> i64 {
        match self.regime {
            Regime::Critical => {
                // near the Montgomery minimizer; only seeds the window
                let zeta = -0.35;
                let shift = self.b.cbrt() * self.h.powf(2.0 / 3.0) * zeta;
                ((0.5 * self.b + shift) / self.h).round() as i64
            }
            Regime::HBounded => (0.5 * self.b).round() as i64,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum AngularWeight {
    Sin,
    InvSin,
    One,
    Sin3,
}

impl AngularWeight {
    fn eval(self, t: f64) -> f64 {
        match self {
            AngularWeight::Sin => t.sin(),
            AngularWeight::InvSin => 1.0 / t.sin(),
            AngularWeight::One => 1.0,
            AngularWeight::Sin3 => t.sin().powi(3),
        }
    }
}

/// θ nodes: both poles and the centres of `cells` equal cells.
pub fn theta_nodes(cells: usize) -> Vec<f64> {
    let d = PI / cells as f64;
    let mut out = Vec::with_capacity(cells + 2);
    out.push(0.0);
    out.extend((0..cells).map(|j| (j as f64 + 0.5) * d));
    out.push(PI);
    out
}

/// Angular P1 matrices on [`theta_nodes`]; the 1/sinθ mass is only formed once
/// the poles are removed.
#[derive(Debug, Clone)]
struct AngularForms {
    nodes: Vec<f64>,
    stiff_sin: Tri,
    mass_sin: Tri,
    mass_one: Tri,
    mass_sin3: Tri,
    mass_inv_sin: Tri,
}

impl AngularForms {
    fn new(cells: usize) -> Self {
        let nodes = theta_nodes(cells);
        Self {
            stiff_sin: fem1d::stiffness_fn(&nodes, f64::sin),
            mass_sin: fem1d::mass_fn(&nodes, AngularWeight::Sin.eval_fn()),
            mass_one: fem1d::mass_fn(&nodes, AngularWeight::One.eval_fn()),
            mass_sin3: fem1d::mass_fn(&nodes, AngularWeight::Sin3.eval_fn()),
            // pole rows are dropped for m ≠ 0; Gauss points never reach the poles
            mass_inv_sin: fem1d::mass_fn(&nodes, AngularWeight::InvSin.eval_fn()),
            nodes,
        }
    }

    fn weight(&self, w: AngularWeight) -> &Tri {
        match w {
            AngularWeight::Sin => &self.mass_sin,
            AngularWeight::InvSin => &self.mass_inv_sin,
            AngularWeight::One => &self.mass_one,
            AngularWeight::Sin3 => &self.mass_sin3,
        }
    }

    /// Poles are free for m = 0 and Dirichlet otherwise.
    fn restrict(&self, t: &Tri, m: i64) -> Tri {
        if m == 0 {
            t.clone()
        } else {
            fem1d::restrict(t, 1, 1)
        }
    }
}

impl AngularWeight {
    fn eval_fn(self) -> impl Fn(f64) -> f64 {
        move |t| self.eval(t)
    }
}

/// Radial forms on the graded grid t = 1 − r, Dirichlet node at t = depth removed.
#[derive(Debug, Clone)]
struct RadialForms {
    kinetic: Tri,
    mass: [Tri; 3],
    boundary: f64,
}

impl RadialForms {
    fn new(p: &BallProblem) -> Self {
        let depth = 1.0 - p.inner_radius();
        let width = p.regime.layer_width(p.h);
        let t = fem1d::graded_grid(depth, p.grid.radial_cells, p.grid.first_cell * width);
        let mut kinetic = fem1d::stiffness_fn(&t, |s| (1.0 - s).powi(2));
        kinetic.0.iter_mut().chain(kinetic.1.iter_mut()).for_each(|v| *v *= p.h * p.h);
        let mass = [0, 2, 4].map(|k| fem1d::restrict(&fem1d::mass_fn(&t, move |s| (1.0 - s).powi(k)), 0, 1));
        Self {
            kinetic: fem1d::restrict(&kinetic, 0, 1),
            mass,
            boundary: -p.h.powf(p.boundary_exponent()),
        }
    }

    fn n(&self) -> usize {
        self.kinetic.0.len()
    }

    fn mass_for(&self, power: i32) -> &Tri {
        &self.mass[(power / 2) as usize]
    }

    /// Radial kinetic plus boundary term.
    fn robin(&self) -> Tri {
        let mut a = self.kinetic.clone();
        a.0[0] += self.boundary;
        a
    }

    /// Smallest eigenvalue of the radial form without potential; the per-mode
    /// spectrum lies above it because every remaining term is non-negative.
    fn floor(&self) -> Result<f64> {
        let pair = tri_pair(&self.robin(), self.mass_for(2))?;
        Ok(solve_tridiagonal(&pair, 1)?.eigenvalues[0])
    }
}

fn tri_pair(a: &Tri, m: &Tri) -> Result<SymmetricOperatorPair> {
    SymmetricOperatorPair::new(SparseSym::tridiagonal(&a.0, &a.1)?, SparseSym::tridiagonal(&m.0, &m.1)?)
}

fn tri_mul(t: &Tri, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut s = t.0[i] * x[i];
            if i > 0 {
                s += t.1[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += t.1[i] * x[i + 1];
            }
            s
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A radial factor in the chosen basis.
enum RadialFactor {
    Full(Vec<SparseSym>),
    Reduced(Vec<SparseSym>),
}

fn project(t: &Tri, basis: &[Vec<f64>]) -> SparseSym {
    let k = basis.len();
    let images: Vec<Vec<f64>> = basis.iter().map(|v| tri_mul(t, v)).collect();
    let mut b = TripletBuilder::with_capacity(k, k * k);
    for i in 0..k {
        for j in 0..k {
            b.add(i, j, 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
        }
    }
    b.build()
}

/// Assembles the per-mode pair; returns it with a strict lower bound of its spectrum.
pub fn ball_mode_pair(p: &BallProblem, m: i64) -> Result<(SymmetricOperatorPair, f64)> {
    let radial = RadialForms::new(p);
    let angular = AngularForms::new(p.grid.theta_cells);
    mode_pair(p, m, &radial, &angular)
}

fn mode_pair(
    p: &BallProblem,
    m: i64,
    radial: &RadialForms,
    angular: &AngularForms,
) -> Result<(SymmetricOperatorPair, f64)> {
    let terms = p.potential_terms(m);
    let robin = radial.robin();
    // radial matrices in the order: robin, r⁰ mass, r² mass, r⁴ mass
    let raw = [&robin, radial.mass_for(0), radial.mass_for(2), radial.mass_for(4)];
    let factor = match p.grid.radial_modes {
        None => RadialFactor::Full(
            raw.iter()
                .map(|t| SparseSym::tridiagonal(&t.0, &t.1))
                .collect::<Result<_>>()?,
        ),
        Some(k) => {
            let mut slice = robin.clone();
            for &(c, power, _) in &terms {
                fem1d::add_scaled(&mut slice, radial.mass_for(power), c);
            }
            let pair = tri_pair(&slice, radial.mass_for(2))?;
            let modes = solve_tridiagonal(&pair, k.min(radial.n()))?;
            let mut basis = modes.eigenvectors.unwrap_or_default();
            for v in basis.iter_mut() {
                let norm = dot(v, &tri_mul(radial.mass_for(2), v)).sqrt();
                v.iter_mut().for_each(|x| *x /= norm);
            }
            RadialFactor::Reduced(raw.iter().map(|t| project(t, &basis)).collect())
        }
    };
    let mats = match &factor {
        RadialFactor::Full(v) | RadialFactor::Reduced(v) => v,
    };
    let [r_robin, r0, r2, r4] = [&mats[0], &mats[1], &mats[2], &mats[3]];
    // angular factors grouped by radial matrix
    let th = |t: &Tri| angular.restrict(t, m);
    let mut groups: [(&SparseSym, Tri); 4] = [
        (r_robin, th(&angular.mass_sin)),
        (r0, th(&angular.stiff_sin)),
        (r2, th(&angular.mass_sin)),
        (r4, th(&angular.mass_sin)),
    ];
    groups[1].1 .0.iter_mut().chain(groups[1].1 .1.iter_mut()).for_each(|v| *v *= p.h * p.h);
    let mut used = [true, true, false, false];
    for &(c, power, w) in &terms {
        if c == 0.0 {
            continue;
        }
        let g = (power / 2 + 1) as usize;
        if !used[g] {
            groups[g].1 .0.iter_mut().chain(groups[g].1 .1.iter_mut()).for_each(|v| *v = 0.0);
            used[g] = true;
        }
        fem1d::add_scaled(&mut groups[g].1, &th(angular.weight(w)), c);
    }
    let active: Vec<(&SparseSym, &Tri)> = groups
        .iter()
        .zip(used)
        .filter(|(_, u)| *u)
        .map(|((r, t), _)| (*r, t))
        .collect();
    let nr = r0.n();
    let mass_theta = th(&angular.mass_sin);
    let a = kron_sum(nr, &active);
    let mass = kron_sum(nr, &[(r2, &mass_theta)]);
    if a.diagonal().iter().any(|v| !v.is_finite()) {
        return Err(Error::Grid(format!("non-finite per-mode assembly at m = {m}")));
    }
    let floor = radial.floor()? + p.potential_floor(m);
    Ok((SymmetricOperatorPair::new(a, mass)?, floor))
}

/// Σ R ⊗ T with index θ-major, radial inner; entries are emitted in row order.
fn kron_sum(nr: usize, terms: &[(&SparseSym, &Tri)]) -> SparseSym {
    let nt = terms[0].1 .0.len();
    let cap: usize = terms.iter().map(|(r, _)| r.nnz() * 3 * nt).sum();
    let mut b = TripletBuilder::with_capacity(nr * nt, cap);
    for i in 0..nt {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(nt - 1);
        for a in 0..nr {
            for j in lo..=hi {
                for (r, t) in terms {
                    let w = match j.cmp(&i) {
                        std::cmp::Ordering::Equal => t.0[i],
                        std::cmp::Ordering::Less => t.1[j],
                        std::cmp::Ordering::Greater => t.1[i],
                    };
                    if w == 0.0 {
                        continue;
                    }
                    for (bcol, v) in r.row(a) {
                        b.add(i * nr + a, j * nr + bcol, w * v);
                    }
                }
            }
        }
    }
    b.build()
}

/// Lowest k eigenvalues of Fourier mode m.
pub fn ball_mode_spectrum(p: &BallProblem, m: i64, k: usize) -> Result<Spectrum> {
    let radial = RadialForms::new(p);
    let angular = AngularForms::new(p.grid.theta_cells);
    mode_spectrum(p, m, k, &radial, &angular)
}

fn mode_spectrum(
    p: &BallProblem,
    m: i64,
    k: usize,
    radial: &RadialForms,
    angular: &AngularForms,
) -> Result<Spectrum> {
    let (pair, floor) = mode_pair(p, m, radial, angular)?;
    let shift = floor - 1e-9 * floor.abs().max(1e-12);
    Ok(solve_sparse(&pair, k, shift)?.with_grid(format!("m = {m}; {}", p.grid.describe())))
}

/// Stopping rule of the adaptive m-window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowPolicy {
    /// Required excess of both window ends over the interior minimum; 10h when unset.
    pub margin: Option<f64>,
    pub max_modes: usize,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            margin: None,
            max_modes: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BallGround {
    pub h: f64,
    pub b: f64,
    pub regime: Regime,
    pub energy: f64,
    pub m_star: i64,
    pub window: (i64, i64),
    pub margin: f64,
    pub inner_radius: f64,
    /// Largest eigen-residual among the window's mode solves.
    pub residual: f64,
    pub grid: String,
    pub table: Vec<(i64, f64)>,
}

/// Minimum of the per-mode ground energies over an adaptive m-window.
pub fn ball_ground(p: &BallProblem) -> Result<BallGround> {
    ball_ground_with(p, WindowPolicy::default())
}

pub fn ball_ground_with(p: &BallProblem, policy: WindowPolicy) -> Result<BallGround> {
    let radial = RadialForms::new(p);
    let angular = AngularForms::new(p.grid.theta_cells);
    let margin = policy.margin.unwrap_or(10.0 * p.h);
    let solve = |modes: Vec<i64>| -> Result<Vec<(i64, f64, f64)>> {
        modes
            .into_par_iter()
            .map(|m| {
                let s = mode_spectrum(p, m, 1, &radial, &angular)?;
                Ok((m, s.eigenvalues[0], s.residuals[0]))
            })
            .collect()
    };

    let center = p.predicted_mode();
    let mut lo = center - 4;
    let mut hi = center + 4;
    let mut rows = solve((lo..=hi).collect())?;
    let mut step = 8;
    loop {
        rows.sort_by_key(|r| r.0);
        let min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let left_ok = rows[0].1 >= min + margin;
        let right_ok = rows[rows.len() - 1].1 >= min + margin;
        if left_ok && right_ok {
            break;
        }
        if (hi - lo + 1) as usize >= policy.max_modes {
            return Err(Error::WindowExhausted {
                table: rows.iter().map(|r| (r.0, r.1)).collect(),
            });
        }
        let mut fresh = Vec::new();
        if !left_ok {
            fresh.extend(lo - step..lo);
            lo -= step;
        }
        if !right_ok {
            fresh.extend(hi + 1..=hi + step);
            hi += step;
        }
        rows.extend(solve(fresh)?);
        step = (step + 4).min(32);
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .copied()
        .expect("window is never empty");
    Ok(BallGround {
        h: p.h,
        b: p.b,
        regime: p.regime,
        energy: best.1,
        m_star: best.0,
        window: (lo, hi),
        margin,
        inner_radius: p.inner_radius(),
        residual: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        grid: p.grid.describe(),
        table: rows.iter().map(|r| (r.0, r.1)).collect(),
    })
}

/// Effective angular form q_{m,b}(f) = ∫ (f'² + (m/sinθ − b/2)² f²) sinθ dθ on a fixed grid.
#[derive(Debug, Clone)]
pub struct AngularProblem {
    forms: AngularForms,
}

impl AngularProblem {
    pub fn new(theta_cells: usize) -> Result<Self> {
        if theta_cells < 64 {
            return Err(Error::Grid(format!("θ grid needs ≥ 64 cells, got {theta_cells}")));
        }
        Ok(Self {
            forms: AngularForms::new(theta_cells),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.forms.nodes
    }

    pub fn lambda(&self, m: i64, b: f64) -> Result<f64> {
        let f = &self.forms;
        let mf = m as f64;
        let mut a = f.restrict(&f.stiff_sin, m);
        if m != 0 {
            fem1d::add_scaled(&mut a, &f.restrict(&f.mass_inv_sin, m), mf * mf);
            fem1d::add_scaled(&mut a, &f.restrict(&f.mass_one, m), -mf * b);
        }
        fem1d::add_scaled(&mut a, &f.restrict(&f.mass_sin, m), 0.25 * b * b);
        if a.0.iter().chain(&a.1).any(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite angular assembly at m = {m}")));
        }
        let pair = tri_pair(&a, &f.restrict(&f.mass_sin, m))?;
        Ok(solve_tridiagonal(&pair, 1)?.eigenvalues[0])
    }

    /// inf over m of λ_m(b) and its minimizer. Modes with |m| beyond the window are
    /// excluded by the pointwise bound λ_m(b) ≥ (|m| ∓ b/2)², so the result is exact
    /// for this grid.
    pub fn effective_energy(&self, b: f64) -> Result<(f64, i64)> {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidInput(format!("b = {b} must be finite and ≥ 0")));
        }
        let center = (0.5 * b).round() as i64;
        let mut table = vec![(center, self.lambda(center, b)?)];
        let mut best = table[0];
        let mut up = center;
        let mut down = center;
        let bound = |m: i64| {
            let mf = m as f64;
            if m >= 0 {
                (mf - 0.5 * b).max(0.0).powi(2)
            } else {
                (-mf + 0.5 * b).powi(2)
            }
        };
        loop {
            let up_done = bound(up + 1) > best.1 && up as f64 + 1.0 >= 0.5 * b;
            let down_done = bound(down - 1) > best.1 && down <= 0;
            if up_done && down_done {
                return Ok((best.1, best.0));
            }
            if table.len() > 10_000 {
                return Err(Error::WindowExhausted { table });
            }
            for m in [(!up_done).then(|| up + 1), (!down_done).then(|| down - 1)].into_iter().flatten() {
                let v = self.lambda(m, b)?;
                table.push((m, v));
                if v < best.1 {
                    best = (m, v);
                }
            }
            if !up_done {
                up += 1;
            }
            if !down_done {
                down -= 1;
            }
        }
    }
}

pub const DEFAULT_THETA_CELLS: usize = 4096;

/// λ_m(b): ground state of the effective angular form.
pub fn lambda_m(m: i64, b: f64, theta_cells: usize) -> Result<f64> {
    AngularProblem::new(theta_cells)?.lambda(m, b)
}

/// 𝔢(b) = inf_m λ_m(b) and the minimizing mode.
pub fn e_of_b(b: f64) -> Result<(f64, i64)> {
    AngularProblem::new(DEFAULT_THETA_CELLS)?.effective_energy(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveAxis {
    B,
    H,
}

/// One Fourier mode's eigenvalue along a parameter axis.
#[derive(Debug, Clone, Serialize)]
pub struct ModeCurve {
    pub m: i64,
    pub axis: CurveAxis,
    pub parameters: Vec<f64>,
    pub values: Vec<f64>,
}

/// λ_m(b) curves for each requested mode.
pub fn mode_curves(modes: &[i64], bs: &[f64], theta_cells: usize) -> Result<Vec<ModeCurve>> {
    let problem = AngularProblem::new(theta_cells)?;
    modes
        .par_iter()
        .map(|&m| {
            let values = bs.iter().map(|&b| problem.lambda(m, b)).collect::<Result<Vec<_>>>()?;
            Ok(ModeCurve {
                m,
                axis: CurveAxis::B,
                parameters: bs.to_vec(),
                values,
            })
        })
        .collect()
}

/// Smooth cut-off: 1 on |x| ≤ 1/2, 0 on |x| ≥ 1. Returns (χ, χ').
pub fn cutoff(x: f64) -> (f64, f64) {
    let a = x.abs();
    if a <= 0.5 {
        return (1.0, 0.0);
    }
    if a >= 1.0 {
        return (0.0, 0.0);
    }
    // ψ(s) = e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)}) with s = 2(1 − |x|)
    let s = 2.0 * (1.0 - a);
    let p = (-1.0 / s).exp();
    let q = (-1.0 / (1.0 - s)).exp();
    let psi = p / (p + q);
    let dp = p / (s * s);
    let dq = -q / ((1.0 - s) * (1.0 - s));
    let dpsi = (dp * (p + q) - p * (dp + dq)) / ((p + q) * (p + q));
    (psi, dpsi * -2.0 * x.signum())
}

/// Composite Gauss integration of several integrands, refined by bisection of
/// every panel until the relative change drops below `tol`.
fn refined_integrals<const N: usize>(breaks: Vec<f64>, tol: f64, f: impl Fn(f64) -> [f64; N]) -> Result<[f64; N]> {
    let eval = |breaks: &[f64]| {
        let rule = Rule::composite(breaks, 6);
        let mut acc = [0.0; N];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            for (a, v) in acc.iter_mut().zip(f(x)) {
                *a += w * v;
            }
        }
        acc
    };
    let mut breaks = breaks;
    let mut last = eval(&breaks);
    let mut change = f64::INFINITY;
    for _ in 0..8 {
        breaks = fem1d::refine(&breaks, 2);
        let next = eval(&breaks);
        change = next
            .iter()
            .zip(&last)
            .map(|(a, b)| (a - b).abs() / a.abs().max(1e-300))
            .fold(0.0, f64::max);
        last = next;
        if change < tol {
            return Ok(last);
        }
    }
    Err(Error::Quadrature { last_change: change })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialBound {
    pub h: f64,
    pub b: f64,
    pub value: f64,
    pub m: i64,
    pub rho: f64,
    /// Set for b < 1e-3, where the angular profile flattens into the cut-off.
    pub small_field: bool,
}

/// Cut-off exponent of the trial state.
pub const TRIAL_RHO: f64 = 13.0 / 60.0;

/// Rayleigh quotient of the Montgomery trial state in the critical regime.
///
/// The state is χ(h^{−ρ}(1−r)) χ(h^{−ρ}(θ−π/2)) e^{imφ} √2 e^{−(1−r)/h} f_{ζ₀}((θ−π/2)/L)
/// with L = (h/b)^{1/3} and m the nearest integer to (b/2 + bL²ζ₀)/h; f_{ζ₀} is the
/// P1 Montgomery ground state, so the quotient is an exact upper bound up to quadrature.
pub fn ball_trial_upper_bound(h: f64, b: f64, montgomery: &MontgomeryMinimum) -> Result<TrialBound> {
    if !(h > 0.0 && h < 1.0 && b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidInput(format!("trial state needs 0 < h < 1 and b ≥ 0, got h={h}, b={b}")));
    }
    let zeta0 = montgomery.zeta0;
    let (_, s_nodes, f) = montgomery_state(zeta0, MontgomeryGrid::default())?;
    let delta = h.powf(TRIAL_RHO);
    let length = if b > 0.0 { (h / b).cbrt() } else { f64::INFINITY };
    let m = if b > 0.0 {
        ((0.5 * b + b * length * length * zeta0) / h).round() as i64
    } else {
        0
    };
    let mf = m as f64;

    let profile = |s: f64| -> (f64, f64) {
        let ds = s_nodes[1] - s_nodes[0];
        let x = (s - s_nodes[0]) / ds;
        if !(x >= 0.0 && x < (s_nodes.len() - 1) as f64) {
            return (0.0, 0.0);
        }
        let e = x.floor() as usize;
        let t = x - e as f64;
        (f[e] * (1.0 - t) + f[e + 1] * t, (f[e + 1] - f[e]) / ds)
    };

    // radial factor P(r) = χ((1−r)/δ) √2 e^{−(1−r)/h}
    let radial = |r: f64| -> [f64; 4] {
        let t = 1.0 - r;
        let (c, dc) = cutoff(t / delta);
        let u = std::f64::consts::SQRT_2 * (-t / h).exp();
        let p = c * u;
        let dp = u * (c / h - dc / delta);
        [dp * dp * r * r, p * p, p * p * r * r, p * p * r.powi(4)]
    };
    let n_r = ((delta / h) * 8.0).ceil().max(16.0) as usize;
    let r_breaks = fem1d::uniform_grid(1.0 - delta, 1.0, n_r);
    let [i_kin, i0, i2, i4] = refined_integrals(r_breaks, 1e-10, radial)?;

    // angular factor Q(θ) = χ((θ−π/2)/δ) F((θ−π/2)/L)
    let angular = |theta: f64| -> [f64; 4] {
        let x = theta - FRAC_PI_2;
        let (c, dc) = cutoff(x / delta);
        let (q, dq) = if length.is_finite() {
            let (v, dv) = profile(x / length);
            (c * v, dc / delta * v + c * dv / length)
        } else {
            let v = profile(0.0).0;
            (c * v, dc / delta * v)
        };
        let s = theta.sin();
        [dq * dq * s, q * q * s, q * q / s, q * q * s * s * s]
    };
    let mut t_breaks = vec![-delta, -0.5 * delta, 0.0, 0.5 * delta, delta];
    if length.is_finite() {
        t_breaks.extend(
            s_nodes
                .iter()
                .map(|s| s * length)
                .filter(|x| x.abs() < delta),
        );
    }
    t_breaks.sort_by(f64::total_cmp);
    t_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let t_breaks: Vec<f64> = t_breaks.into_iter().map(|x| x + FRAC_PI_2).collect();
    // kinks of the P1 profile sit on breakpoints, so refinement converges fast
    let [j_kin, j_sin, j_inv, j_sin3] = refined_integrals(t_breaks, 1e-10, angular)?;

    let numerator = h * h * i_kin * j_sin + h * h * i0 * j_kin + h * h * mf * mf * i0 * j_inv
        - h * mf * b * i2 * j_sin
        + 0.25 * b * b * i4 * j_sin3
        - h * 2.0 * j_sin;
    let value = numerator / (i2 * j_sin);
    if !value.is_finite() {
        return Err(Error::Quadrature { last_change: f64::NAN });
    }
    Ok(TrialBound {
        h,
        b,
        value,
        m,
        rho: TRIAL_RHO,
        small_field: b < 1e-3,
    })
}

/// Ball ground energies along an h-sweep fitted against the regime's expansion.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeVerification {
    pub regime: Regime,
    pub b: f64,
    pub fit: FitReport,
    /// Coefficients implied by the leading-order analysis of the solved form.
    pub expected: [f64; 3],
    /// Sign of the middle coefficient (h for critical, h^{3/2} for h-bounded).
    pub middle_sign: f64,
    pub grounds: Vec<BallGround>,
}

/// Runs [`ball_ground`] for every h and fits the regime's three-term expansion.
///
/// `nu0` is the Montgomery constant. For the critical form the magnetic term is
/// ν₀ b^{2/3} h^{4/3}; the h-bounded comparison uses 𝔢(b) from [`e_of_b`].
pub fn verify_regime(regime: Regime, b: f64, h_list: &[f64], nu0: f64) -> Result<RegimeVerification> {
    verify_regime_on(regime, b, h_list, nu0, None)
}

pub fn verify_regime_on(
    regime: Regime,
    b: f64,
    h_list: &[f64],
    nu0: f64,
    grid: Option<BallGrid>,
) -> Result<RegimeVerification> {
    if h_list.len() < 3 || h_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("h list must be strictly decreasing with ≥ 3 entries".into()));
    }
    let grounds = h_list
        .iter()
        .map(|&h| {
            let mut p = BallProblem::new(regime, h, b)?;
            if let Some(g) = grid {
                p = p.with_grid(g)?;
            }
            ball_ground(&p)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<(f64, f64)> = grounds.iter().map(|g| (g.h, g.energy)).collect();
    let fit = fit_expansion(&samples, &regime.fit_exponents())?;
    let expected = match regime {
        Regime::Critical => [-1.0, -2.0, nu0 * b.powf(2.0 / 3.0)],
        Regime::HBounded => [-1.0, -2.0, e_of_b(b)?.0],
    };
    let middle_sign = fit.coefficients[1].signum();
    Ok(RegimeVerification {
        regime,
        b,
        fit,
        expected,
        middle_sign,
        grounds,
    })
}
