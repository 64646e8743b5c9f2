//! Piecewise-linear Galerkin matrices on one-dimensional grids.
//!
//! Matrices are returned as (diagonal, super-diagonal) pairs.

use crate::quadrature::gauss_legendre;

pub type Tri = (Vec<f64>, Vec<f64>);

fn zero(n: usize) -> Tri {
    (vec![0.0; n], vec![0.0; n.saturating_sub(1)])
}

/// ∫ c(t) u'v' dt with c given pointwise.
pub fn stiffness_fn(nodes: &[f64], c: impl Fn(f64) -> f64) -> Tri {
    let n = nodes.len();
    let (g, w) = gauss_legendre(4);
    let mut m = zero(n);
    for e in 0..n - 1 {
        let (a, b) = (nodes[e], nodes[e + 1]);
        let len = b - a;
        let avg: f64 = g
            .iter()
            .zip(&w)
            .map(|(x, wt)| 0.5 * wt * c(0.5 * (a + b) + 0.5 * len * x))
            .sum();
        let k = avg / len;
        m.0[e] += k;
        m.0[e + 1] += k;
        m.1[e] -= k;
    }
    m
}

/// ∫ q(t) u v dt with q given pointwise (4-point Gauss per element).
pub fn mass_fn(nodes: &[f64], q: impl Fn(f64) -> f64) -> Tri {
    let n = nodes.len();
    let (g, w) = gauss_legendre(4);
    let mut m = zero(n);
    for e in 0..n - 1 {
        let (a, b) = (nodes[e], nodes[e + 1]);
        let len = b - a;
        let (mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0);
        for (x, wt) in g.iter().zip(&w) {
            let s = 0.5 * (1.0 + x);
            let qv = q(a + s * len) * 0.5 * wt * len;
            m00 += qv * (1.0 - s) * (1.0 - s);
            m01 += qv * (1.0 - s) * s;
            m11 += qv * s * s;
        }
        m.0[e] += m00;
        m.0[e + 1] += m11;
        m.1[e] += m01;
    }
    m
}

/// Linear interpolant of nodal samples, evaluated on element `e` at local coordinate s ∈ [0,1].
#[inline]
fn lerp(v: &[f64], e: usize, s: f64) -> f64 {
    v[e] * (1.0 - s) + v[e + 1] * s
}

/// ∫ c u'v' with c the piecewise-linear interpolant of nodal samples (exact).
pub fn stiffness_samples(nodes: &[f64], c: &[f64]) -> Tri {
    let n = nodes.len();
    let mut m = zero(n);
    for e in 0..n - 1 {
        let k = 0.5 * (c[e] + c[e + 1]) / (nodes[e + 1] - nodes[e]);
        m.0[e] += k;
        m.0[e + 1] += k;
        m.1[e] -= k;
    }
    m
}

/// ∫ (Π a)(Π b) u v with Π the piecewise-linear interpolant (exact, 3-point Gauss).
pub fn mass_samples(nodes: &[f64], a: &[f64], b: Option<&[f64]>) -> Tri {
    let n = nodes.len();
    let (g, w) = gauss_legendre(3);
    let mut m = zero(n);
    for e in 0..n - 1 {
        let len = nodes[e + 1] - nodes[e];
        let (mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0);
        for (x, wt) in g.iter().zip(&w) {
            let s = 0.5 * (1.0 + x);
            let mut q = lerp(a, e, s);
            if let Some(b) = b {
                q *= lerp(b, e, s);
            }
            let qv = q * 0.5 * wt * len;
            m00 += qv * (1.0 - s) * (1.0 - s);
            m01 += qv * (1.0 - s) * s;
            m11 += qv * s * s;
        }
        m.0[e] += m00;
        m.0[e + 1] += m11;
        m.1[e] += m01;
    }
    m
}

pub fn add_scaled(target: &mut Tri, other: &Tri, c: f64) {
    for (t, o) in target.0.iter_mut().zip(&other.0) {
        *t += c * o;
    }
    for (t, o) in target.1.iter_mut().zip(&other.1) {
        *t += c * o;
    }
}

/// Drops the first `lo` and last `hi` nodes (Dirichlet elimination).
pub fn restrict(m: &Tri, lo: usize, hi: usize) -> Tri {
    let n = m.0.len();
    let d = m.0[lo..n - hi].to_vec();
    let o = m.1[lo..n - 1 - hi].to_vec();
    (d, o)
}

/// Grid on [0, length] with first cell about `fine` wide and geometrically growing cells.
pub fn graded_grid(length: f64, n_cells: usize, fine: f64) -> Vec<f64> {
    let target = fine * n_cells as f64 / length;
    if !(target < 1.0) || fine <= 0.0 {
        return uniform_grid(0.0, length, n_cells);
    }
    // first cell of t(s) = L (e^{cs} - 1)/(e^c - 1) is about L c /((e^c - 1) N)
    let g = |c: f64| c / c.exp_m1();
    let (mut lo, mut hi) = (1e-12, 1.0);
    while g(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let mut out: Vec<f64> = (0..=n_cells)
        .map(|i| {
            let s = i as f64 / n_cells as f64;
            length * (c * s).exp_m1() / c.exp_m1()
        })
        .collect();
    out[n_cells] = length;
    out
}

pub fn uniform_grid(a: f64, b: f64, n_cells: usize) -> Vec<f64> {
    (0..=n_cells)
        .map(|i| a + (b - a) * i as f64 / n_cells as f64)
        .collect()
}

/// Midpoint refinement: every cell split in `factor` equal parts.
pub fn refine(nodes: &[f64], factor: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((nodes.len() - 1) * factor + 1);
    for w in nodes.windows(2) {
        for k in 0..factor {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / factor as f64);
        }
    }
    out.push(*nodes.last().unwrap());
    out
}
