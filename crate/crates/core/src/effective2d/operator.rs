use super::chart::ChartData;
use super::coefficients::EffectiveCoefficients;
use crate::eigsolve::{solve_sparse_from_floor, Spectrum, SymmetricOperatorPair, TripletBuilder};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

/// The doubled real form of the effective operator on the interior chart vertices.
#[derive(Debug, Clone)]
pub struct EffectiveAssembly {
    pub pair: SymmetricOperatorPair,
    /// Pointwise infimum of γ + μ − h²ρ − β̂ᵀα⁻¹β̂ over the quadrature points; a lower
    /// bound of the discrete spectrum.
    pub lower_bound: f64,
    /// Largest |H − Hᵀ| entry relative to the largest |H| entry of the doubled stiffness.
    pub hermitian_defect: f64,
    /// Complex unknowns; the real system has twice as many.
    pub unknowns: usize,
}

const ELEMENT_ORDER: usize = 4;
const LINE_ORDER: usize = 4;

fn unit_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (x.iter().map(|v| 0.5 * (v + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
}

struct LocalMatrices {
    vertices: [usize; 4],
    stiffness: [[Complex64; 4]; 4],
    mass: [[Complex64; 4]; 4],
    lower_bound: f64,
}

/// Assembles the sesquilinear form of Σ P_ℓ α_{kℓ} P_k + Σ_k (β̂_k P_k + P_k β̂_k) + γ + μ − h²ρ,
/// P_k = −ih∂_k − Ã⁰_k, with Dirichlet conditions on the chart boundary.
///
/// The basis is bilinear hat functions times the phase e^{iΛ_a/h}, Λ_a(y) the line integral of
/// Ã⁰ from vertex a to y; then P_k acts on each basis function through the gauge-invariant
/// residual ∂_kΛ_a − Ã⁰_k = ∫₀¹ s𝔅(y_a + s(y − y_a)) ds · (d₂, −d₁), d = y − y_a.
pub fn effective_assembly(coeffs: &EffectiveCoefficients, chart: &ChartData) -> Result<EffectiveAssembly> {
    let [c0, c1] = chart.cells();
    if coeffs.cells != [c0, c1] || coeffs.alpha.len() != chart.vertex_count() {
        return Err(Error::Dimension("coefficients and chart are on different grids".into()));
    }
    let h = chart.h();
    let [d1, d2] = chart.spacing();
    let (qx, qw) = unit_rule(ELEMENT_ORDER);
    let (lx, lw) = unit_rule(LINE_ORDER);
    let gauge = chart.gauge();

    let elements: Vec<(usize, usize)> = (0..c1).flat_map(|j| (0..c0).map(move |i| (i, j))).collect();
    let locals: Vec<LocalMatrices> = elements
        .par_iter()
        .map(|&(i, j)| {
            let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
            let vertices = corners.map(|(a, b)| coeffs.index(a, b));
            let ys = corners.map(|(a, b)| chart.coordinate(a, b));
            let area = corners.map(|(a, b)| chart.frame(a, b).area);
            let mut stiffness = [[Complex64::new(0.0, 0.0); 4]; 4];
            let mut mass = [[Complex64::new(0.0, 0.0); 4]; 4];
            let mut lower_bound = f64::INFINITY;
            for (&xi, &wx) in qx.iter().zip(&qw) {
                for (&eta, &wy) in qx.iter().zip(&qw) {
                    let n = [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), (1.0 - xi) * eta, xi * eta];
                    let dn = [
                        [-(1.0 - eta) / d1, -(1.0 - xi) / d2],
                        [(1.0 - eta) / d1, -xi / d2],
                        [-eta / d1, (1.0 - xi) / d2],
                        [eta / d1, xi / d2],
                    ];
                    let y = [ys[0][0] + xi * d1, ys[0][1] + eta * d2];
                    let mut alpha = Matrix2::zeros();
                    let mut beta = [0.0; 2];
                    let mut v = 0.0;
                    let mut jac = 0.0;
                    for a in 0..4 {
                        alpha += n[a] * coeffs.alpha[vertices[a]];
                        let bh = coeffs.beta_hat(vertices[a]);
                        beta[0] += n[a] * bh[0];
                        beta[1] += n[a] * bh[1];
                        v += n[a] * coeffs.scalar_potential(vertices[a]);
                        jac += n[a] * area[a];
                    }
                    let inv = alpha.try_inverse().unwrap_or_else(Matrix2::zeros);
                    let bb = nalgebra::Vector2::new(beta[0], beta[1]);
                    lower_bound = lower_bound.min(v - bb.dot(&(inv * bb)));
                    let weight = wx * wy * d1 * d2 * jac;

                    let mut phase = [0.0; 4];
                    let mut dd = [[Complex64::new(0.0, 0.0); 2]; 4];
                    for a in 0..4 {
                        let d = [y[0] - ys[a][0], y[1] - ys[a][1]];
                        let (mut lam, mut flux) = (0.0, 0.0);
                        for (&s, &ws) in lx.iter().zip(&lw) {
                            let sample = gauge.sample([ys[a][0] + s * d[0], ys[a][1] + s * d[1]]);
                            lam += ws * (sample.potential[0] * d[0] + sample.potential[1] * d[1]);
                            flux += ws * s * sample.field;
                        }
                        phase[a] = lam;
                        let r = [flux * d[1], -flux * d[0]];
                        for k in 0..2 {
                            dd[a][k] = Complex64::new(r[k] * n[a], -h * dn[a][k]);
                        }
                    }
                    for a in 0..4 {
                        for b in 0..4 {
                            let e = Complex64::from_polar(weight, (phase[a] - phase[b]) / h);
                            let mut s = Complex64::new(v * n[a] * n[b], 0.0);
                            for k in 0..2 {
                                for l in 0..2 {
                                    s += alpha[(k, l)] * dd[a][k] * dd[b][l].conj();
                                }
                                s += beta[k] * (dd[a][k] * n[b] + n[a] * dd[b][k].conj());
                            }
                            stiffness[b][a] += e * s;
                            mass[b][a] += e * (n[a] * n[b]);
                        }
                    }
                }
            }
            LocalMatrices {
                vertices,
                stiffness,
                mass,
                lower_bound,
            }
        })
        .collect();

    let interior = |v: usize| -> Option<usize> {
        let (i, j) = (v % (c0 + 1), v / (c0 + 1));
        (i > 0 && i < c0 && j > 0 && j < c1).then(|| (i - 1) + (c0 - 1) * (j - 1))
    };
    let unknowns = (c0 - 1) * (c1 - 1);
    let mut ka = TripletBuilder::with_capacity(2 * unknowns, 64 * locals.len());
    let mut ma = TripletBuilder::with_capacity(2 * unknowns, 64 * locals.len());
    let mut lower_bound = f64::INFINITY;
    for local in &locals {
        lower_bound = lower_bound.min(local.lower_bound);
        for b in 0..4 {
            let Some(p) = interior(local.vertices[b]) else { continue };
            for a in 0..4 {
                let Some(q) = interior(local.vertices[a]) else { continue };
                for (builder, z) in [(&mut ka, local.stiffness[b][a]), (&mut ma, local.mass[b][a])] {
                    builder.add(2 * p, 2 * q, z.re);
                    builder.add(2 * p + 1, 2 * q + 1, z.re);
                    builder.add(2 * p, 2 * q + 1, -z.im);
                    builder.add(2 * p + 1, 2 * q, z.im);
                }
            }
        }
    }
    let stiffness = ka.build();
    let mass = ma.build();
    let hermitian_defect = stiffness.max_asymmetry() / stiffness.max_abs().max(f64::MIN_POSITIVE);
    let pair = SymmetricOperatorPair::new(stiffness, mass)?;
    Ok(EffectiveAssembly {
        pair,
        lower_bound,
        hermitian_defect,
        unknowns,
    })
}

/// The k lowest eigenvalues of the effective operator (each appears twice in the doubled
/// real system; one copy is kept).
pub fn effective_spectrum(coeffs: &EffectiveCoefficients, chart: &ChartData, k: usize) -> Result<Spectrum> {
    let assembly = effective_assembly(coeffs, chart)?;
    if k == 0 || k > assembly.unknowns {
        return Err(Error::Dimension(format!(
            "requested {k} eigenvalues of a {}-dimensional effective operator",
            assembly.unknowns
        )));
    }
    let shift = assembly.lower_bound - 1e-6 * assembly.lower_bound.abs().max(1.0);
    let doubled = solve_sparse_from_floor(&assembly.pair, 2 * k, shift)?;
    let keep = |v: &[f64]| v.iter().step_by(2).copied().collect::<Vec<f64>>();
    let eigenvectors = doubled
        .eigenvectors
        .map(|vs| vs.into_iter().step_by(2).collect::<Vec<_>>());
    let [c0, c1] = chart.cells();
    Ok(Spectrum {
        eigenvalues: keep(&doubled.eigenvalues),
        eigenvectors,
        residuals: keep(&doubled.residuals),
        meta: doubled.meta,
    }
    .with_grid(format!("effective2d {c0}x{c1} magnetic Q1, doubled real")))
}
