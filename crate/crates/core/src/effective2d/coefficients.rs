use super::chart::ChartData;
use crate::error::{Error, Result};
use crate::model1d::{transverse_ground, RightCondition, WeightedForm1D};
use nalgebra::Matrix2;
use rayon::prelude::*;

/// Coefficient fields of the effective operator on the domain vertices of a chart,
/// indexed i + (cells[0] + 1)·j.
#[derive(Debug, Clone)]
pub struct EffectiveCoefficients {
    pub h: f64,
    pub cells: [usize; 2],
    pub alpha: Vec<Matrix2<f64>>,
    pub beta: Vec<Matrix2<f64>>,
    pub gamma: Vec<Matrix2<f64>>,
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl EffectiveCoefficients {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + (self.cells[0] + 1) * j
    }

    /// β̂_k = Σ_ℓ β_{kℓ}.
    pub fn beta_hat(&self, v: usize) -> [f64; 2] {
        let b = &self.beta[v];
        [b[(0, 0)] + b[(0, 1)], b[(1, 0)] + b[(1, 1)]]
    }

    /// γ + μ − h²ρ.
    pub fn scalar_potential(&self, v: usize) -> f64 {
        self.gamma[v].sum() + self.mu[v] - self.h * self.h * self.rho[v]
    }

    pub fn beta_norm(&self) -> f64 {
        self.beta.iter().map(|m| m.abs().max()).fold(0.0, f64::max)
    }

    pub fn gamma_norm(&self) -> f64 {
        self.gamma.iter().map(|m| m.abs().max()).fold(0.0, f64::max)
    }

    pub fn rho_norm(&self) -> f64 {
        self.rho.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; t.len()];
    for (k, pair) in t.windows(2).enumerate() {
        let d = 0.5 * (pair[1] - pair[0]);
        w[k] += d;
        w[k + 1] += d;
    }
    w
}

/// Solves the transverse problem at every chart node and integrates the coefficients.
pub fn assemble_coefficients(chart: &ChartData) -> Result<EffectiveCoefficients> {
    let h = chart.h();
    let t = chart.t();
    let [c0, c1] = chart.cells();
    let stride = c0 + 3;
    let slots: Vec<(isize, isize)> = (-1..=c1 as isize + 1)
        .flat_map(|j| (-1..=c0 as isize + 1).map(move |i| (i, j)))
        .collect();

    let tw = trapezoid_weights(t);
    // Per node: transverse weight w̃ and the mode f, both on the t grid, with f
    // renormalized so the trapezoidal ∫ f² w̃ used below is exactly 1.
    let modes = slots
        .par_iter()
        .map(|&(i, j)| {
            let frame = chart.frame_at(i, j);
            let weight: Vec<f64> = t.iter().map(|&s| frame.metric(h * s).sqrt_det / frame.area).collect();
            let at_point = |source: Error| Error::AtChartPoint {
                y1: frame_coordinate(chart, i, 0),
                y2: frame_coordinate(chart, j, 1),
                source: Box::new(source),
            };
            let beta = weight[0];
            let form = WeightedForm1D::new(t.to_vec(), weight.clone(), vec![0.0; t.len()], beta, RightCondition::Dirichlet)
                .map_err(at_point)?;
            let mode = transverse_ground(&form).map_err(at_point)?;
            let norm: f64 = mode.f.iter().zip(&weight).zip(&tw).map(|((f, w), q)| q * w * f * f).sum();
            let f = mode.f.iter().map(|v| v / norm.sqrt()).collect::<Vec<f64>>();
            Ok((weight, mode.mu, f))
        })
        .collect::<Result<Vec<_>>>()?;

    let [d1, d2] = chart.spacing();
    let slot = |i: isize, j: isize| ((i + 1) + stride as isize * (j + 1)) as usize;
    let nv = (c0 + 1) * (c1 + 1);
    let mut alpha = Vec::with_capacity(nv);
    let mut beta = Vec::with_capacity(nv);
    let mut gamma = Vec::with_capacity(nv);
    let mut mu = Vec::with_capacity(nv);
    // S_k = Σ_ℓ ∫ g^{kℓ} f ∂_ℓ f w̃ dt, weighted by |G|^{1/2}
    let mut flux = Vec::with_capacity(nv);
    for j in 0..=c1 as isize {
        for i in 0..=c0 as isize {
            let (weight, m, f) = &modes[slot(i, j)];
            let df = [
                (&modes[slot(i + 1, j)].2, &modes[slot(i - 1, j)].2, d1),
                (&modes[slot(i, j + 1)].2, &modes[slot(i, j - 1)].2, d2),
            ];
            let frame = chart.frame_at(i, j);
            let dev = chart.deviation_at(i, j);
            let mut a = Matrix2::zeros();
            let mut b = Matrix2::zeros();
            let mut g = Matrix2::zeros();
            let mut s = [0.0; 2];
            for (ti, &tt) in t.iter().enumerate() {
                let up = frame.metric(h * tt).upper;
                let wf2 = tw[ti] * weight[ti] * f[ti] * f[ti];
                let d = [-dev[ti][0], -dev[ti][1]];
                let grad = df.map(|(p, q, step)| (p[ti] - q[ti]) / (2.0 * step));
                for k in 0..2 {
                    for l in 0..2 {
                        a[(k, l)] += wf2 * up[(k, l)];
                        b[(k, l)] += wf2 * up[(k, l)] * d[l];
                        g[(k, l)] += wf2 * up[(k, l)] * d[k] * d[l];
                        s[k] += tw[ti] * weight[ti] * up[(k, l)] * f[ti] * grad[l];
                    }
                }
            }
            if !(a[(0, 0)] > 0.0 && a.determinant() > 0.0) {
                return Err(Error::Assembly(format!(
                    "α is not positive definite at vertex ({i}, {j})"
                )));
            }
            alpha.push(a);
            beta.push(b);
            gamma.push(g);
            mu.push(*m);
            flux.push([s[0] * frame.area, s[1] * frame.area]);
        }
    }

    // ρ = |G|^{-1/2} Σ_k ∂_k(|G|^{1/2} S_k); one-sided second-order differences on the boundary.
    let idx = |i: usize, j: usize| i + (c0 + 1) * j;
    let derivative = |values: &dyn Fn(usize) -> f64, at: usize, n: usize, step: f64| -> f64 {
        if at == 0 {
            (-3.0 * values(0) + 4.0 * values(1) - values(2)) / (2.0 * step)
        } else if at == n {
            (3.0 * values(n) - 4.0 * values(n - 1) + values(n - 2)) / (2.0 * step)
        } else {
            (values(at + 1) - values(at - 1)) / (2.0 * step)
        }
    };
    let mut rho = Vec::with_capacity(nv);
    for j in 0..=c1 {
        for i in 0..=c0 {
            let dx = derivative(&|p| flux[idx(p, j)][0], i, c0, d1);
            let dy = derivative(&|q| flux[idx(i, q)][1], j, c1, d2);
            rho.push((dx + dy) / chart.frame(i, j).area);
        }
    }

    Ok(EffectiveCoefficients {
        h,
        cells: [c0, c1],
        alpha,
        beta,
        gamma,
        mu,
        rho,
    })
}

fn frame_coordinate(chart: &ChartData, k: isize, axis: usize) -> f64 {
    let step = chart.spacing()[axis];
    chart.coordinate(0, 0)[axis] + k as f64 * step
}
