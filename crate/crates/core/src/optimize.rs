//! Derivative-free minimizers used by the model and geometry modules.

use crate::error::{Error, Result};

/// Golden-section search for a minimum of a unimodal function on [a, b].
pub fn golden_section(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Evaluates `f` on a uniform scan and returns a bracket [x_{i-1}, x_{i+1}] around
/// the unique interior local minimum. Several local minima or a minimum on the
/// scan boundary are reported as ambiguous.
pub fn scan_bracket(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let table: Vec<(f64, f64)> = xs.iter().map(|&x| (x, f(x))).collect();
    let minima: Vec<usize> = (1..n)
        .filter(|&i| table[i].1 <= table[i - 1].1 && table[i].1 <= table[i + 1].1)
        .collect();
    match minima.as_slice() {
        [i] => Ok((table[i - 1].0, table[i + 1].0)),
        [] => Err(Error::MinimizationAmbiguous {
            message: "no interior minimum on the scan".into(),
            table,
        }),
        _ => Err(Error::MinimizationAmbiguous {
            message: format!("{} local minima on the scan", minima.len()),
            table,
        }),
    }
}

/// Nelder–Mead simplex minimization in two variables.
pub fn nelder_mead(
    f: impl Fn([f64; 2]) -> f64,
    start: [f64; 2],
    step: f64,
    xtol: f64,
    max_iter: usize,
) -> Option<([f64; 2], f64, usize)> {
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut vals = simplex.map(&f);
    for it in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        simplex = order.map(|i| simplex[i]);
        vals = order.map(|i| vals[i]);
        let size = (1..3)
            .map(|k| ((simplex[k][0] - simplex[0][0]).powi(2) + (simplex[k][1] - simplex[0][1]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        if size < xtol {
            return Some((simplex[0], vals[0], it));
        }
        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let x = along(-0.5);
                (x, f(x))
            } else {
                let x = along(0.5);
                (x, f(x))
            };
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        0.5 * (simplex[0][0] + simplex[k][0]),
                        0.5 * (simplex[0][1] + simplex[k][1]),
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    None
}
