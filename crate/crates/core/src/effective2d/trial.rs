use super::chart::VectorPotential;
use crate::ball::cutoff;
use crate::error::{Error, Result};
use crate::geometry::{best_chart, curvature_from_jet, ChartPoint, MagneticField, ParamSurface, Point3};
use crate::quadrature::Rule;
use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

/// Cut-off exponent of the trial state, χ(h^{−ρ}y).
pub const DEFAULT_TRIAL_RHO: f64 = 0.4;

const TOLERANCE: f64 = 1e-7;
const MAX_LEVELS: usize = 5;
const ORDER: usize = 8;

/// Rayleigh quotient of the boundary trial state and its quadrature record.
#[derive(Debug, Clone, Serialize)]
pub struct TrialEstimate {
    pub value: f64,
    /// Relative change at the last refinement.
    pub quadrature_change: f64,
    pub levels: usize,
    pub h: f64,
    pub sigma: f64,
    pub rho: f64,
    pub point: [f64; 3],
    /// 𝓑₃⁰ = ⟨B, n⟩ at the point, in coordinates with G(0) = Id.
    pub normal_field: f64,
    pub kappa: f64,
}

/// Surface quantities at z in coordinates y = y₀ + T z with Tᵀ G(y₀) T = Id.
struct Column {
    point: Point3,
    tangents: [Point3; 2],
    normal: Point3,
    normal_derivatives: [Point3; 2],
    first: Matrix2<f64>,
    second: Matrix2<f64>,
    third: Matrix2<f64>,
    potential: [f64; 2],
}

struct Frame<'a> {
    surface: &'a dyn ParamSurface,
    chart: usize,
    origin: ChartPoint,
    transform: Matrix2<f64>,
    potential: &'a VectorPotential,
}

impl Frame<'_> {
    fn column(&self, z: [f64; 2]) -> Result<Column> {
        let dy = self.transform * Vector2::new(z[0], z[1]);
        let y = ChartPoint::new(self.origin.y1 + dy[0], self.origin.y2 + dy[1]);
        let jet = self.surface.jet(self.chart, y);
        let c = curvature_from_jet(&jet, y)?;
        let t = &self.transform;
        let mix = |v: [Point3; 2]| [0, 1].map(|k| v[0] * t[(0, k)] + v[1] * t[(1, k)]);
        let tangents = mix(jet.d);
        let a = self.potential.at(&jet.point);
        Ok(Column {
            point: jet.point,
            tangents,
            normal: c.normal,
            normal_derivatives: mix(c.normal_derivatives),
            first: t.transpose() * c.first * t,
            second: t.transpose() * c.second * t,
            third: t.transpose() * c.third * t,
            potential: [tangents[0].dot(&a), tangents[1].dot(&a)],
        })
    }
}

fn axis_breaks(half: f64, inner: usize) -> Vec<f64> {
    let mut b = vec![-half];
    for k in 0..=inner {
        b.push(-0.5 * half + half * k as f64 / inner as f64);
    }
    b.push(half);
    b
}

fn depth_breaks(top: f64, layer: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut s = 0.25 * layer;
    while s < 0.5 * top {
        b.push(s);
        s *= 2.0;
    }
    b.push(0.5 * top);
    b.push(top);
    b
}

fn bisect(breaks: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * breaks.len());
    for w in breaks.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*breaks.last().expect("non-empty"));
    out
}

/// Rayleigh quotient of ũ = χ(h^{−ρ}z₁)χ(h^{−ρ}z₂)χ(h^{−ρ}y₃) f(h^{−1/σ}y₃) φ_h(z₁) e^{iw/h} for the
/// form ∫|(−ih∇ − A)u|² − h^{2−1/σ}∫_∂|u|², with f(τ) = √2 e^{−τ}, φ_h(z₁) = exp(−|𝓑₃⁰|z₁²/(2h))
/// and w the quadratic gauge built from Ã⁰ and its first derivatives at x₀. Coordinates z are
/// orthonormal at x₀ and the potential is in the normal gauge.
pub fn variational_upper_bound(
    surface: &dyn ParamSurface,
    potential: &VectorPotential,
    field: &MagneticField,
    x0: &Point3,
    h: f64,
    sigma: f64,
    rho: f64,
) -> Result<TrialEstimate> {
    if !(h > 0.0 && h < 1.0) || !(sigma > 0.0 && sigma < 2.0) || !(rho > 0.0 && rho < 0.5) {
        return Err(Error::InvalidInput(format!(
            "need 0 < h < 1, 0 < σ < 2, 0 < ρ < 1/2 (got h = {h}, σ = {sigma}, ρ = {rho})"
        )));
    }
    let (chart, origin) =
        best_chart(surface, x0).ok_or_else(|| Error::InvalidInput("no chart locates x₀".into()))?;
    let c0 = curvature_from_jet(&surface.jet(chart, origin), origin)?;
    let eig = c0.first.symmetric_eigen();
    let transform = eig.eigenvectors
        * Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let frame = Frame {
        surface,
        chart,
        origin,
        transform,
        potential,
    };
    let top = h.powf(rho);
    let layer = h.powf(1.0 / sigma);
    let boundary_coeff = h.powf(2.0 - 1.0 / sigma);

    let centre = frame.column([0.0, 0.0])?;
    let shape = c0.shape_operator().symmetric_eigen().eigenvalues;
    let principal = shape.iter().map(|k| k.abs()).fold(0.0, f64::max);
    if top * principal >= 0.5 {
        return Err(Error::CollarTooDeep {
            delta: top,
            max_curvature: principal,
        });
    }
    let b_normal = centre.tangents[0].cross(&centre.tangents[1]).dot(&field.at(&centre.point));
    // a_ij = ∂_j Ã⁰_i(0) by fourth-order differences
    let step = 1e-3 * top;
    let mut grad = Matrix2::zeros();
    for j in 0..2 {
        let at = |m: f64| {
            let mut z = [0.0; 2];
            z[j] = m * step;
            frame.column(z).map(|c| c.potential)
        };
        let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
        for i in 0..2 {
            grad[(i, j)] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * step);
        }
    }
    let a0 = centre.potential;
    let gauge_gradient = |z: [f64; 2]| {
        [
            a0[0] + grad[(0, 0)] * z[0] + grad[(0, 1)] * z[1],
            a0[1] + grad[(0, 1)] * z[0] + grad[(1, 1)] * z[1],
        ]
    };
    let well = b_normal.abs() / h;

    let evaluate = |zb: &[f64], yb: &[f64]| -> Result<f64> {
        let zr = Rule::composite(zb, ORDER);
        let yr = Rule::composite(yb, ORDER);
        let line = Rule::gauss(2, 0.0, 1.0);
        let sums = zr
            .nodes
            .par_iter()
            .zip(&zr.weights)
            .map(|(&z1, &w1)| -> Result<[f64; 3]> {
                let (c1, dc1) = cutoff(z1 / top);
                let phi = (-0.5 * well * z1 * z1).exp();
                let x = c1 * phi;
                let dx = dc1 / top * phi - c1 * phi * well * z1;
                let mut acc = [0.0; 3];
                if x == 0.0 {
                    return Ok(acc);
                }
                for (&z2, &w2) in zr.nodes.iter().zip(&zr.weights) {
                    let (zz, dzz) = cutoff(z2 / top);
                    if zz == 0.0 {
                        continue;
                    }
                    let dz = dzz / top;
                    let col = frame.column([z1, z2])?;
                    let gw = gauge_gradient([z1, z2]);
                    let area = col.first.determinant().sqrt();
                    let v0 = x * zz * std::f64::consts::SQRT_2;
                    acc[2] += w1 * w2 * v0 * v0 * area;
                    let mut a = col.potential;
                    let mut prev = 0.0;
                    for (&y3, &w3) in yr.nodes.iter().zip(&yr.weights) {
                        for (&s, &ws) in line.nodes.iter().zip(&line.weights) {
                            let d = prev + s * (y3 - prev);
                            let b = field.at(&(col.point - d * col.normal));
                            for k in 0..2 {
                                let dk = col.tangents[k] - d * col.normal_derivatives[k];
                                a[k] += ws * (y3 - prev) * (-col.normal).cross(&dk).dot(&b);
                            }
                        }
                        prev = y3;
                        let (cy, dcy) = cutoff(y3 / top);
                        if cy == 0.0 {
                            continue;
                        }
                        let f = std::f64::consts::SQRT_2 * (-y3 / layer).exp();
                        let y = cy * f;
                        let dy = dcy / top * f - cy * f / layer;
                        let g = col.first - 2.0 * y3 * col.second + y3 * y3 * col.third;
                        let det = g.determinant();
                        let up = Matrix2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / det;
                        let v = x * zz * y;
                        let dv = [dx * zz * y, x * dz * y];
                        let c = [gw[0] - a[0], gw[1] - a[1]];
                        let mut e = h * h * (x * zz * dy).powi(2);
                        for k in 0..2 {
                            for l in 0..2 {
                                e += up[(k, l)] * (h * h * dv[k] * dv[l] + c[k] * c[l] * v * v);
                            }
                        }
                        let wgt = w1 * w2 * w3 * det.sqrt();
                        acc[0] += wgt * e;
                        acc[1] += wgt * v * v;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<[f64; 3]>>>()?;
        let [num, den, bnd] = sums
            .iter()
            .fold([0.0; 3], |s, a| [s[0] + a[0], s[1] + a[1], s[2] + a[2]]);
        Ok((num - boundary_coeff * bnd) / den)
    };

    let mut zb = axis_breaks(top, 4);
    let mut yb = depth_breaks(top, layer);
    let mut value = evaluate(&zb, &yb)?;
    let mut change = f64::INFINITY;
    let mut levels = 1;
    while levels < MAX_LEVELS {
        zb = bisect(&zb);
        yb = bisect(&yb);
        let next = evaluate(&zb, &yb)?;
        change = ((next - value) / next).abs();
        value = next;
        levels += 1;
        if change < TOLERANCE {
            break;
        }
    }
    if !(change < TOLERANCE) {
        return Err(Error::Quadrature { last_change: change });
    }
    Ok(TrialEstimate {
        value,
        quadrature_change: change,
        levels,
        h,
        sigma,
        rho,
        point: [centre.point.x, centre.point.y, centre.point.z],
        normal_field: b_normal,
        kappa: c0.kappa,
    })
}
