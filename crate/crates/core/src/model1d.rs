//! One-dimensional model operators.
//!
//! All forms are discretized with piecewise-linear elements and solved with the
//! tridiagonal eigensolver.

use crate::asymfit::{fit_expansion, FitReport};
use crate::eigsolve::{solve_tridiagonal, SparseSym, SymmetricOperatorPair};
use crate::error::{Error, Result};
use crate::fem1d::{self, Tri};
use crate::optimize::{golden_section, scan_bracket};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RightCondition {
    Dirichlet,
    Free,
}

/// The form u ↦ ∫ w|u'|² + ∫ V|u|² w − β|u(0)|² on a grid 0 = t₀ < … < t_N.
#[derive(Debug, Clone)]
pub struct WeightedForm1D {
    grid: Vec<f64>,
    weight: Vec<f64>,
    potential: Vec<f64>,
    boundary_coeff: f64,
    right: RightCondition,
}

impl WeightedForm1D {
    pub fn new(
        grid: Vec<f64>,
        weight: Vec<f64>,
        potential: Vec<f64>,
        boundary_coeff: f64,
        right: RightCondition,
    ) -> Result<Self> {
        if grid.len() < 17 {
            return Err(Error::Grid(format!("{} nodes; at least 17 required", grid.len())));
        }
        if weight.len() != grid.len() || potential.len() != grid.len() {
            return Err(Error::Dimension("weight/potential samples must match the grid".into()));
        }
        if grid[0] != 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("grid must start at 0 and increase strictly".into()));
        }
        if let Some(i) = weight.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::InvalidWeight {
                detail: format!("weight {} at t = {}", weight[i], grid[i]),
                h: None,
            });
        }
        if potential.iter().any(|v| !v.is_finite()) || !boundary_coeff.is_finite() {
            return Err(Error::Grid("non-finite potential or boundary coefficient".into()));
        }
        Ok(Self {
            grid,
            weight,
            potential,
            boundary_coeff,
            right,
        })
    }

    /// w ≡ 1, V ≡ 0 on the given grid.
    pub fn robin_flat(grid: Vec<f64>, beta: f64, right: RightCondition) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![1.0; n], vec![0.0; n], beta, right)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn boundary_coeff(&self) -> f64 {
        self.boundary_coeff
    }

    pub fn right(&self) -> RightCondition {
        self.right
    }

    /// Stiffness and mass on the free nodes.
    pub fn assemble(&self) -> Result<SymmetricOperatorPair> {
        let mut a = fem1d::stiffness_samples(&self.grid, &self.weight);
        let v = fem1d::mass_samples(&self.grid, &self.potential, Some(&self.weight));
        fem1d::add_scaled(&mut a, &v, 1.0);
        a.0[0] -= self.boundary_coeff;
        let m = fem1d::mass_samples(&self.grid, &self.weight, None);
        let hi = usize::from(self.right == RightCondition::Dirichlet);
        tri_pair(&fem1d::restrict(&a, 0, hi), &fem1d::restrict(&m, 0, hi))
    }
}

pub(crate) fn tri_pair(a: &Tri, m: &Tri) -> Result<SymmetricOperatorPair> {
    SymmetricOperatorPair::new(
        SparseSym::tridiagonal(&a.0, &a.1)?,
        SparseSym::tridiagonal(&m.0, &m.1)?,
    )
}

#[derive(Debug, Clone)]
pub struct TransverseMode {
    pub mu: f64,
    /// Ground state on the full grid (zero at a Dirichlet end), ∫ f² w = 1.
    pub f: Vec<f64>,
    pub h: Option<f64>,
    /// ∂f/∂y₁ and ∂f/∂y₂ samples when computed by a caller that varies the form in y′.
    pub derivative_estimates: Option<[Vec<f64>; 2]>,
}

/// Ground eigenpair of a weighted Sturm–Liouville form, sign-normalized so f > 0.
pub fn transverse_ground(form: &WeightedForm1D) -> Result<TransverseMode> {
    let pair = form.assemble()?;
    let s = solve_tridiagonal(&pair, 1)?;
    let mut f = s.eigenvectors.expect("tridiagonal solver returns vectors").remove(0);
    if f[0] < 0.0 {
        f.iter_mut().for_each(|v| *v = -*v);
    }
    if form.right == RightCondition::Dirichlet {
        f.push(0.0);
    }
    Ok(TransverseMode {
        mu: s.eigenvalues[0],
        f,
        h: None,
        derivative_estimates: None,
    })
}

/// Grid used for the rescaled transverse problems: first cell `fine`, geometric growth.
#[derive(Debug, Clone, Copy)]
pub struct TransverseGrid {
    pub cells: usize,
    pub first_cell: f64,
}

impl Default for TransverseGrid {
    fn default() -> Self {
        Self {
            cells: 8000,
            first_cell: 2e-4,
        }
    }
}

/// Exponent basis {2−2/σ, 2−1/σ, 2} of the transverse Robin expansion.
pub fn robin_exponents(sigma: f64) -> [f64; 3] {
    [2.0 - 2.0 / sigma, 2.0 - 1.0 / sigma, 2.0]
}

/// Ground energy of the rescaled transverse Robin operator with weight
/// 1 − 2κh^{1/σ}τ − C*h^{2/σ}τ² on (0, h^{ρ−1/σ}), scaled back by h^{2−2/σ}.
pub fn robin_transverse_energy(
    kappa: f64,
    c_star: f64,
    sigma: f64,
    h: f64,
    rho: f64,
    grid: TransverseGrid,
) -> Result<f64> {
    let eps = h.powf(1.0 / sigma);
    let delta = h.powf(rho - 1.0 / sigma);
    let nodes = fem1d::graded_grid(delta, grid.cells, grid.first_cell);
    let weight: Vec<f64> = nodes
        .iter()
        .map(|&t| 1.0 - 2.0 * kappa * eps * t - c_star * eps * eps * t * t)
        .collect();
    if let Some(i) = weight.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::InvalidWeight {
            detail: format!("weight changes sign at τ = {} (δ = {delta})", nodes[i]),
            h: Some(h),
        });
    }
    let n = nodes.len();
    let form = WeightedForm1D::new(nodes, weight, vec![0.0; n], 1.0, RightCondition::Dirichlet)?;
    let mode = transverse_ground(&form)?;
    Ok(h.powf(2.0 - 2.0 / sigma) * mode.mu)
}

/// Solves the transverse Robin problem for each h and fits the three-term expansion.
pub fn robin_transverse_expansion(
    kappa: f64,
    c_star: f64,
    sigma: f64,
    h_list: &[f64],
    rho: f64,
) -> Result<FitReport> {
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(Error::InvalidInput(format!("σ = {sigma} outside (0, 2)")));
    }
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::InvalidInput(format!("ρ = {rho} outside (0, 1/2)")));
    }
    if c_star < 0.0 {
        return Err(Error::InvalidInput("C* must be non-negative".into()));
    }
    let samples = h_list
        .iter()
        .map(|&h| {
            robin_transverse_energy(kappa, c_star, sigma, h, rho, TransverseGrid::default())
                .map(|v| (h, v))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_expansion(&samples, &robin_exponents(sigma))
}

/// Grid for the Montgomery operator on [−L, L].
#[derive(Debug, Clone, Copy)]
pub struct MontgomeryGrid {
    pub half_width: f64,
    pub cells: usize,
}

impl Default for MontgomeryGrid {
    fn default() -> Self {
        Self {
            half_width: 7.0,
            cells: 14_000,
        }
    }
}

fn montgomery_pair(zeta: f64, nodes: &[f64]) -> Result<SymmetricOperatorPair> {
    let mut a = fem1d::stiffness_fn(nodes, |_| 1.0);
    let v = fem1d::mass_fn(nodes, |s| (zeta + 0.5 * s * s).powi(2));
    fem1d::add_scaled(&mut a, &v, 1.0);
    let m = fem1d::mass_fn(nodes, |_| 1.0);
    tri_pair(&fem1d::restrict(&a, 1, 1), &fem1d::restrict(&m, 1, 1))
}

/// Ground state of −d²/ds² + (ζ + s²/2)² with Dirichlet ends; returns (λ, nodes, f)
/// with f normalized in L²(ds). The half-width is enlarged until the potential
/// at the ends exceeds λ by 10.
pub fn montgomery_state(zeta: f64, grid: MontgomeryGrid) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let spacing = 2.0 * grid.half_width / grid.cells as f64;
    let mut half_width = grid.half_width;
    loop {
        let cells = (2.0 * half_width / spacing).round() as usize;
        let nodes = fem1d::uniform_grid(-half_width, half_width, cells);
        let pair = montgomery_pair(zeta, &nodes)?;
        let s = solve_tridiagonal(&pair, 1)?;
        let lambda = s.eigenvalues[0];
        if (zeta + 0.5 * half_width * half_width).powi(2) >= lambda + 10.0 {
            let mut f = s.eigenvectors.unwrap().remove(0);
            if f.iter().sum::<f64>() < 0.0 {
                f.iter_mut().for_each(|v| *v = -*v);
            }
            let mut full = Vec::with_capacity(nodes.len());
            full.push(0.0);
            full.extend(f);
            full.push(0.0);
            return Ok((lambda, nodes, full));
        }
        half_width *= 1.5;
    }
}

/// λ(ζ) on the given grid.
pub fn montgomery_lambda(zeta: f64, half_width: f64, cells: usize) -> Result<f64> {
    if cells < 16 || !(half_width > 0.0) {
        return Err(Error::Grid("Montgomery grid needs ≥ 16 cells and L > 0".into()));
    }
    montgomery_state(zeta, MontgomeryGrid { half_width, cells }).map(|s| s.0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MontgomeryMinimum {
    pub nu0: f64,
    pub zeta0: f64,
}

/// ν₀ = min_ζ λ(ζ) and its minimizer ζ₀ on the default grid.
pub fn montgomery_min() -> Result<MontgomeryMinimum> {
    montgomery_min_on(MontgomeryGrid::default())
}

pub fn montgomery_min_on(grid: MontgomeryGrid) -> Result<MontgomeryMinimum> {
    let eval = |z: f64| montgomery_lambda(z, grid.half_width, grid.cells).unwrap_or(f64::NAN);
    let (a, b) = scan_bracket(-4.0, 1.0, 50, eval)?;
    let (zeta0, nu0) = golden_section(a, b, 1e-8, eval);
    if !(zeta0 < 0.0 && nu0 > 0.0) {
        return Err(Error::MinimizationAmbiguous {
            message: format!("minimum ({zeta0}, {nu0}) violates ζ₀ < 0 < ν₀"),
            table: vec![(zeta0, nu0)],
        });
    }
    Ok(MontgomeryMinimum { nu0, zeta0 })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HarmonicGround {
    pub value: f64,
    /// Set when η = 0: the spectrum starts at 0 and is essential.
    pub degenerate_well: bool,
}

/// Ground energy of (−ih∂_s − m)² + (ξ + m + ηs)², reduced by a gauge change and a
/// translation to −h²u'' + (ηs)²u on [−L, L] with Dirichlet ends.
pub fn harmonic_ground(
    h: f64,
    _m: f64,
    _xi: f64,
    eta: f64,
    half_width: f64,
    cells: usize,
) -> Result<HarmonicGround> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput("h must be positive".into()));
    }
    if eta == 0.0 {
        return Ok(HarmonicGround {
            value: 0.0,
            degenerate_well: true,
        });
    }
    let width = (h / eta.abs()).sqrt();
    if half_width < 8.0 * width {
        return Err(Error::Grid(format!(
            "half-width {half_width} does not contain the well of width {width}"
        )));
    }
    if cells < 16 {
        return Err(Error::Grid("need at least 16 cells".into()));
    }
    let nodes = fem1d::uniform_grid(-half_width, half_width, cells);
    let mut a = fem1d::stiffness_fn(&nodes, |_| h * h);
    let v = fem1d::mass_fn(&nodes, |s| (eta * s).powi(2));
    fem1d::add_scaled(&mut a, &v, 1.0);
    let m = fem1d::mass_fn(&nodes, |_| 1.0);
    let pair = tri_pair(&fem1d::restrict(&a, 1, 1), &fem1d::restrict(&m, 1, 1))?;
    let s = solve_tridiagonal(&pair, 1)?;
    Ok(HarmonicGround {
        value: s.eigenvalues[0],
        degenerate_well: false,
    })
}

/// Grid for the de Gennes operator on (0, T).
#[derive(Debug, Clone, Copy)]
pub struct DeGennesGrid {
    pub length: f64,
    pub spacing: f64,
}

impl Default for DeGennesGrid {
    fn default() -> Self {
        Self {
            length: 20.0,
            spacing: 0.002,
        }
    }
}

/// Ground energy of −d²/dt² + (t − ξ)² on (0, T), Neumann at 0 and Dirichlet at T.
pub fn degennes_lambda(xi: f64, grid: DeGennesGrid) -> Result<f64> {
    let cells = (grid.length / grid.spacing).round() as usize;
    let nodes = fem1d::uniform_grid(0.0, grid.length, cells);
    let mut a = fem1d::stiffness_fn(&nodes, |_| 1.0);
    let v = fem1d::mass_fn(&nodes, |t| (t - xi).powi(2));
    fem1d::add_scaled(&mut a, &v, 1.0);
    let m = fem1d::mass_fn(&nodes, |_| 1.0);
    let pair = tri_pair(&fem1d::restrict(&a, 0, 1), &fem1d::restrict(&m, 0, 1))?;
    Ok(solve_tridiagonal(&pair, 1)?.eigenvalues[0])
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DeGennesMinimum {
    pub theta0: f64,
    pub xi_min: f64,
}

/// Θ₀ = min_ξ of the de Gennes ground energy, and its minimizer.
pub fn degennes_theta0() -> Result<DeGennesMinimum> {
    degennes_theta0_on(DeGennesGrid::default())
}

pub fn degennes_theta0_on(grid: DeGennesGrid) -> Result<DeGennesMinimum> {
    let eval = |x: f64| degennes_lambda(x, grid).unwrap_or(f64::NAN);
    let (a, b) = scan_bracket(0.0, 3.0, 30, eval)?;
    let (xi_min, theta0) = golden_section(a, b, 1e-8, eval);
    if !(theta0 > 0.5 && theta0 < 1.0) {
        return Err(Error::MinimizationAmbiguous {
            message: format!("Θ₀ = {theta0} outside (1/2, 1)"),
            table: vec![(xi_min, theta0)],
        });
    }
    Ok(DeGennesMinimum { theta0, xi_min })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_robin_half_line() {
        let grid = fem1d::graded_grid(40.0, 20_000, 1e-4);
        let form = WeightedForm1D::robin_flat(grid.clone(), 1.0, RightCondition::Dirichlet).unwrap();
        let mode = transverse_ground(&form).unwrap();
        assert!((mode.mu + 1.0).abs() < 1e-8, "{}", mode.mu);
        // eigenfunction √2 e^{-t}
        for (t, f) in grid.iter().zip(&mode.f).take(2000).step_by(97) {
            assert!((f - 2f64.sqrt() * (-t).exp()).abs() < 1e-5);
        }
        let n = mode.f.len();
        assert!(mode.f[..n - 1].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn rejects_sign_changing_weight() {
        let grid = fem1d::uniform_grid(0.0, 1.0, 32);
        let w: Vec<f64> = grid.iter().map(|t| 0.5 - t).collect();
        let r = WeightedForm1D::new(grid, w, vec![0.0; 33], 1.0, RightCondition::Dirichlet);
        assert!(matches!(r, Err(Error::InvalidWeight { .. })));
    }

    #[test]
    fn rejects_short_grids() {
        let grid = fem1d::uniform_grid(0.0, 1.0, 8);
        assert!(WeightedForm1D::robin_flat(grid, 1.0, RightCondition::Free).is_err());
    }

    #[test]
    fn robin_energy_reports_offending_h() {
        let r = robin_transverse_energy(1.0, 1.0, 1.0, 0.04, 0.2, TransverseGrid::default());
        match r {
            Err(Error::InvalidWeight { h, .. }) => assert_eq!(h, Some(0.04)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn harmonic_levels_match_eta_h() {
        let g = harmonic_ground(0.1, 3.7, -1.2, 2.0, 12.0 * (0.05f64).sqrt(), 4800).unwrap();
        assert!((g.value - 0.2).abs() < 1e-6, "{}", g.value);
        let z = harmonic_ground(0.5, 1.0, 2.0, 0.0, 1.0, 100).unwrap();
        assert!(z.degenerate_well && z.value == 0.0);
    }

    #[test]
    fn degennes_gaussian_at_zero() {
        let v = degennes_lambda(0.0, DeGennesGrid::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }
}
