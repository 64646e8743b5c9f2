use super::{dot, SolverMeta, Spectrum, SymmetricOperatorPair, DEFAULT_TOLERANCE, MAX_ITERATIONS};
use crate::error::{Error, Result};

struct Tridiagonal {
    a_diag: Vec<f64>,
    a_off: Vec<f64>,
    m_diag: Vec<f64>,
    m_off: Vec<f64>,
}

impl Tridiagonal {
    /// Number of generalized eigenvalues strictly below `x` (Sylvester inertia of A − xM).
    fn count_below(&self, x: f64) -> usize {
        let n = self.a_diag.len();
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut d = self.a_diag[0] - x * self.m_diag[0];
        for i in 0..n {
            if i > 0 {
                let e = self.a_off[i - 1] - x * self.m_off[i - 1];
                d = (self.a_diag[i] - x * self.m_diag[i]) - e * e / d;
            }
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Solves (A − xM) y = b by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, x: f64, b: &[f64], floor: f64) -> Vec<f64> {
        let n = b.len();
        let mut diag: Vec<f64> = (0..n).map(|i| self.a_diag[i] - x * self.m_diag[i]).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| self.a_off[i] - x * self.m_off[i]).collect();
        let mut lower = off.clone();
        let mut upper = off;
        let mut upper2 = vec![0.0; n.saturating_sub(2)];
        let mut rhs = b.to_vec();
        for k in 0..n - 1 {
            if lower[k].abs() > diag[k].abs() {
                // swap rows k and k+1
                std::mem::swap(&mut diag[k], &mut lower[k]);
                let t = upper[k];
                upper[k] = diag[k + 1];
                diag[k + 1] = t;
                if k + 1 < n - 1 {
                    upper2[k] = upper[k + 1];
                    upper[k + 1] = 0.0;
                }
                rhs.swap(k, k + 1);
            }
            if diag[k] == 0.0 {
                diag[k] = floor;
            }
            let f = lower[k] / diag[k];
            diag[k + 1] -= f * upper[k];
            if k + 1 < n - 1 {
                upper[k + 1] -= f * upper2[k];
            }
            rhs[k + 1] -= f * rhs[k];
        }
        if diag[n - 1] == 0.0 {
            diag[n - 1] = floor;
        }
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= upper[i] * y[i + 1];
            }
            if i + 2 < n {
                s -= upper2[i] * y[i + 2];
            }
            y[i] = s / diag[i];
        }
        y
    }

    fn mass_mul(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|i| {
                let mut s = self.m_diag[i] * v[i];
                if i > 0 {
                    s += self.m_off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.m_off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }
}

/// k smallest generalized eigenpairs of a tridiagonal pair: Sturm-count bisection
/// followed by inverse iteration for the vectors.
pub fn solve_tridiagonal(pair: &SymmetricOperatorPair, k: usize) -> Result<Spectrum> {
    let n = pair.n();
    if k > n || k == 0 {
        return Err(Error::Dimension(format!("requested {k} eigenpairs of an {n}x{n} pair")));
    }
    if pair.stiffness().half_bandwidth() > 1 || pair.mass().half_bandwidth() > 1 {
        return Err(Error::Dimension("pair is not tridiagonal".into()));
    }
    let t = Tridiagonal {
        a_diag: pair.stiffness().diagonal(),
        a_off: pair.stiffness().super_diagonal(),
        m_diag: pair.mass().diagonal(),
        m_off: pair.mass().super_diagonal(),
    };
    let mass_only = Tridiagonal {
        a_diag: t.m_diag.clone(),
        a_off: t.m_off.clone(),
        m_diag: vec![0.0; n],
        m_off: vec![0.0; n.saturating_sub(1)],
    };
    if mass_only.count_below(0.0) > 0 {
        return Err(Error::InvalidMass("mass matrix is not positive definite".into()));
    }

    // bracket the k smallest eigenvalues
    let mut lo = -1.0f64;
    let mut guard = 0;
    while t.count_below(lo) > 0 {
        lo -= 2.0 * lo.abs().max(1.0);
        guard += 1;
        if guard > 2000 {
            return Err(solver_error("could not bracket lower spectrum end", vec![]));
        }
    }
    let mut hi = 1.0f64;
    guard = 0;
    while t.count_below(hi) < k {
        hi += 2.0 * hi.abs().max(1.0);
        guard += 1;
        if guard > 2000 {
            return Err(solver_error("could not bracket upper spectrum end", vec![]));
        }
    }

    let mut values = Vec::with_capacity(k);
    for j in 0..k {
        // smallest x with count_below(x) > j
        let (mut a, mut b) = (lo, hi);
        if let Some(&prev) = values.last() {
            a = a.max(prev - 4.0 * f64::EPSILON * f64::abs(prev));
        }
        for _ in 0..2000 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if t.count_below(mid) > j {
                b = mid;
            } else {
                a = mid;
            }
        }
        values.push(0.5 * (a + b));
    }

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut total_iterations = 0;
    let mut tolerance = DEFAULT_TOLERANCE;
    let spread = values.last().unwrap() - values[0];
    let cluster_gap = 1e-9 * (values.iter().fold(0.0f64, |m, v| m.max(v.abs())) + spread).max(1e-300);
    let pivot_floor = f64::EPSILON
        * (pair.stiffness().norm_inf() + values.iter().fold(0.0f64, |m, v| m.max(v.abs())) * pair.mass().norm_inf())
            .max(f64::MIN_POSITIVE);
    let mut polished = Vec::with_capacity(k);
    for (j, &lambda) in values.iter().enumerate() {
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i * 2654435761 + j * 40503) % 1000) as f64 / 1000.0)
            .collect();
        let mut log = Vec::new();
        let mut converged = false;
        let mut res = f64::INFINITY;
        let mut floor = 0.0;
        for it in 0..MAX_ITERATIONS {
            let mx = t.mass_mul(&x);
            let mut y = t.shifted_solve(lambda, &mx, pivot_floor);
            // orthogonalize against converged neighbours in the same cluster
            for (q, &mu) in vectors.iter().zip(&values) {
                if (mu - lambda).abs() <= cluster_gap {
                    let mq = t.mass_mul(q);
                    let c = dot(&y, &mq);
                    for (yi, qi) in y.iter_mut().zip(q) {
                        *yi -= c * qi;
                    }
                }
            }
            let norm = dot(&y, &t.mass_mul(&y)).sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(solver_error("inverse iteration produced a degenerate vector", log));
            }
            for yi in &mut y {
                *yi /= norm;
            }
            x = y;
            res = pair.residual(lambda, &x);
            floor = pair.residual_floor(lambda, &x);
            log.push(format!("eigenpair {j} iteration {it}: residual {res:e}"));
            total_iterations += 1;
            if res <= DEFAULT_TOLERANCE.max(floor) && it >= 1 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(solver_error(
                &format!("inverse iteration for eigenpair {j} stalled at residual {res:e}"),
                log,
            ));
        }
        tolerance = tolerance.max(floor);
        // deterministic sign: first significant component positive
        let pivot = x.iter().copied().find(|v| v.abs() > 1e-8).unwrap_or(1.0);
        if pivot < 0.0 {
            for v in &mut x {
                *v = -*v;
            }
        }
        // the Rayleigh quotient is second-order accurate in the vector error
        let rq = dot(&x, &pair.stiffness().mul_vec(&x)) / dot(&x, &t.mass_mul(&x));
        let rq_res = pair.residual(rq, &x);
        if rq_res <= res {
            polished.push(rq);
            residuals.push(rq_res);
        } else {
            polished.push(lambda);
            residuals.push(res);
        }
        vectors.push(x);
    }
    let values = polished;

    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: Some(vectors),
        residuals,
        meta: SolverMeta {
            solver: "sturm-bisection+inverse-iteration".into(),
            iterations: total_iterations,
            shift: None,
            tolerance,
            grid: String::new(),
        },
    })
}

fn solver_error(message: &str, log: Vec<String>) -> Error {
    Error::Solver {
        message: message.to_string(),
        log,
    }
}
