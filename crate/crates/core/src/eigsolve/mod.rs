//! Symmetric generalized eigensolvers for assembled quadratic forms.
//!
//! Two paths: a Sturm-count bisection solver for tridiagonal pairs and a
//! shift-invert block subspace iteration on top of a skyline LDLᵀ factorization
//! for everything else.

mod skyline;
mod sparse;
mod subspace;
mod tridiag;

pub use skyline::{rcm_ordering, SkylineLdl};
pub use sparse::{SparseSym, TripletBuilder};
pub use subspace::{solve_sparse, solve_sparse_from_floor};
pub use tridiag::solve_tridiagonal;

use crate::error::{Error, Result};
use serde::Serialize;

/// Default residual tolerance on ‖Av − λMv‖ / ‖Mv‖.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Iteration cap for inverse and subspace iteration.
pub const MAX_ITERATIONS: usize = 500;

/// A discrete quadratic form together with its Gram (mass) matrix.
#[derive(Debug, Clone)]
pub struct SymmetricOperatorPair {
    stiffness: SparseSym,
    mass: SparseSym,
}

impl SymmetricOperatorPair {
    pub fn new(stiffness: SparseSym, mass: SparseSym) -> Result<Self> {
        if stiffness.n() != mass.n() {
            return Err(Error::Dimension(format!(
                "stiffness is {0}x{0}, mass is {1}x{1}",
                stiffness.n(),
                mass.n()
            )));
        }
        if stiffness.n() == 0 {
            return Err(Error::Dimension("empty operator pair".into()));
        }
        let scale = stiffness.max_abs().max(f64::MIN_POSITIVE);
        let asym = stiffness.max_asymmetry();
        if asym > 1e-12 * scale {
            return Err(Error::Assembly(format!(
                "stiffness asymmetry {asym:e} exceeds 1e-12 relative"
            )));
        }
        let mscale = mass.max_abs().max(f64::MIN_POSITIVE);
        if mass.max_asymmetry() > 1e-12 * mscale {
            return Err(Error::InvalidMass("mass matrix is not symmetric".into()));
        }
        if let Some((i, d)) = mass
            .diagonal()
            .into_iter()
            .enumerate()
            .find(|(_, d)| !(*d > 0.0))
        {
            return Err(Error::InvalidMass(format!("diagonal entry {i} is {d}")));
        }
        Ok(Self { stiffness, mass })
    }

    pub fn stiffness(&self) -> &SparseSym {
        &self.stiffness
    }

    pub fn mass(&self) -> &SparseSym {
        &self.mass
    }

    pub fn n(&self) -> usize {
        self.stiffness.n()
    }

    /// The pair (A + c·M, M).
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            stiffness: self.stiffness.add_scaled(&self.mass, c),
            mass: self.mass.clone(),
        }
    }

    /// Relative residual ‖Av − λMv‖ / ‖Mv‖.
    pub fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        let av = self.stiffness.mul_vec(v);
        let mv = self.mass.mul_vec(v);
        let num: f64 = av
            .iter()
            .zip(&mv)
            .map(|(a, m)| (a - lambda * m).powi(2))
            .sum::<f64>()
            .sqrt();
        let den = mv.iter().map(|x| x * x).sum::<f64>().sqrt();
        num / den
    }

    /// Roundoff floor for the residual of a pair (λ, v).
    pub(crate) fn residual_floor(&self, lambda: f64, v: &[f64]) -> f64 {
        let mv = self.mass.mul_vec(v);
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mvn = mv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = self.stiffness.norm_inf() + lambda.abs() * self.mass.norm_inf();
        1e3 * f64::EPSILON * scale * vn / mvn
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverMeta {
    pub solver: String,
    pub iterations: usize,
    pub shift: Option<f64>,
    /// Effective residual tolerance: the requested one or the roundoff floor, whichever is larger.
    pub tolerance: f64,
    pub grid: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    pub residuals: Vec<f64>,
    pub meta: SolverMeta,
}

impl Spectrum {
    pub fn ground(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn with_grid(mut self, grid: impl Into<String>) -> Self {
        self.meta.grid = grid.into();
        self
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
