//! Versioned fixture file for derived constants, and the finite-difference oracle
//! chain that produces them.
//!
//! The oracles use cell- or node-centered finite differences with Richardson
//! extrapolation, a discretization independent of the finite-element path used
//! by the rest of the crate.

use crate::asymfit::richardson;
use crate::error::{Error, Result};
use crate::optimize::{golden_section, scan_bracket};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const FIXTURE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FixtureRecord {
    pub value: f64,
    pub oracle: String,
    pub grid: String,
    pub extrapolation_order: Option<f64>,
    pub date: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FixtureFile {
    pub version: u32,
    pub records: BTreeMap<String, FixtureRecord>,
}

impl FixtureFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: FixtureFile =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("fixture file: {e}")))?;
        if file.version != FIXTURE_VERSION {
            return Err(Error::InvalidInput(format!(
                "fixture file version {} (expected {FIXTURE_VERSION})",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::from("# Derived constants with their oracle metadata.\n");
        out.push_str(&toml::to_string_pretty(self).expect("fixture serialization"));
        out
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.records
            .get(name)
            .map(|r| r.value)
            .ok_or_else(|| Error::InvalidInput(format!("fixture '{name}' missing")))
    }
}

/// The fixture file shipped with the repository.
pub fn bundled() -> FixtureFile {
    FixtureFile::parse(include_str!("../../../fixtures/constants.toml"))
        .expect("bundled fixture file is valid")
}

pub mod oracle {
    //! Finite-difference oracles.

    use super::*;

    /// Smallest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
    pub fn smallest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
        let count = |x: f64| {
            let mut c = 0;
            let mut d = 1.0;
            for i in 0..diag.len() {
                let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
                d = diag[i] - x - if i == 0 { 0.0 } else { e2 / d };
                if d == 0.0 {
                    d = -1e-300;
                }
                if d < 0.0 {
                    c += 1;
                }
            }
            c
        };
        let mut lo = diag
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
                    + if i < off.len() { off[i].abs() } else { 0.0 };
                d - r
            })
            .fold(f64::INFINITY, f64::min);
        let mut hi = diag[0];
        while count(hi) == 0 {
            hi += hi.abs().max(1.0);
        }
        lo -= 1e-12 * lo.abs().max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Node-centered FD for −u'' + V u on [−L, L] with Dirichlet ends; `cells` cells.
    pub fn dirichlet_line(v: impl Fn(f64) -> f64, half_width: f64, cells: usize) -> f64 {
        let dx = 2.0 * half_width / cells as f64;
        let n = cells - 1;
        let diag: Vec<f64> = (1..=n)
            .map(|i| 2.0 / (dx * dx) + v(-half_width + i as f64 * dx))
            .collect();
        smallest_eigenvalue(&diag, &vec![-1.0 / (dx * dx); n - 1])
    }

    /// Cell-centered finite volumes for −(p f')' + q f = λ r f on (a, b).
    /// `left_dirichlet`/`right_dirichlet` choose between zero-flux and zero-value ends.
    pub fn finite_volume(
        p: impl Fn(f64) -> f64,
        q: impl Fn(f64) -> f64,
        r: impl Fn(f64) -> f64,
        (a, b): (f64, f64),
        cells: usize,
        left_robin: f64,
        right_dirichlet: bool,
    ) -> f64 {
        let dx = (b - a) / cells as f64;
        let centers: Vec<f64> = (0..cells).map(|j| a + (j as f64 + 0.5) * dx).collect();
        let face = |j: usize| p(a + j as f64 * dx) / (dx * dx);
        let mut diag = vec![0.0; cells];
        let mut off = vec![0.0; cells - 1];
        for j in 0..cells {
            let mut d = q(centers[j]);
            if j > 0 {
                d += face(j);
            }
            if j + 1 < cells {
                d += face(j + 1);
                off[j] = -face(j + 1);
            } else if right_dirichlet {
                d += 2.0 * face(cells);
            }
            diag[j] = d;
        }
        // Robin end: flux p f' = -β f at a, with f(a) ≈ f₀ - (dx/2) f'(a)
        if left_robin != 0.0 {
            let pa = p(a);
            let beta = left_robin;
            // boundary flux −β f(a)/dx, f(a) = f₀ / (1 − β dx / (2 pa))
            diag[0] -= beta / (1.0 - beta * dx / (2.0 * pa)) / dx;
        }
        let rs: Vec<f64> = centers.iter().map(|&c| r(c)).collect();
        let sd: Vec<f64> = diag.iter().zip(&rs).map(|(d, w)| d / w).collect();
        let so: Vec<f64> = off
            .iter()
            .enumerate()
            .map(|(j, o)| o / (rs[j] * rs[j + 1]).sqrt())
            .collect();
        smallest_eigenvalue(&sd, &so)
    }

    pub struct Extrapolated {
        pub limit: f64,
        pub observed_order: Option<f64>,
        pub values: Vec<f64>,
    }

    /// Evaluates `f` at N, 2N, 4N and extrapolates with order 2.
    pub fn extrapolate(base: usize, f: impl Fn(usize) -> f64) -> Result<Extrapolated> {
        let values: Vec<f64> = [base, 2 * base, 4 * base].iter().map(|&n| f(n)).collect();
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if values.windows(2).all(|w| (w[1] - w[0]).abs() <= 1e-9 * scale) {
            // converged below the roundoff level of the differences
            return Ok(Extrapolated {
                limit: values[2],
                observed_order: None,
                values,
            });
        }
        let r = richardson(&values, 2.0)?;
        Ok(Extrapolated {
            limit: r.limit,
            observed_order: r.observed_order,
            values,
        })
    }

    pub const MONTGOMERY_HALF_WIDTH: f64 = 14.0;
    pub const MONTGOMERY_CELLS: usize = 2000;

    /// λ(ζ) from FD on [−14, 14] with 2000/4000/8000 cells and Richardson extrapolation.
    pub fn montgomery(zeta: f64) -> Result<Extrapolated> {
        extrapolate(MONTGOMERY_CELLS, |n| {
            dirichlet_line(|s| (zeta + 0.5 * s * s).powi(2), MONTGOMERY_HALF_WIDTH, n)
        })
    }

    /// de Gennes ground energy on (0, 20), Neumann at 0.
    pub fn degennes(xi: f64) -> Result<Extrapolated> {
        extrapolate(2000, |n| {
            finite_volume(|_| 1.0, |t| (t - xi).powi(2), |_| 1.0, (0.0, 20.0), n, 0.0, true)
        })
    }

    /// λ_m(b) from the cell-centered θ-form on (0, π).
    pub fn lambda_m(m: i64, b: f64) -> Result<Extrapolated> {
        let m = m as f64;
        extrapolate(1000, |n| {
            finite_volume(
                f64::sin,
                |t| (m / t.sin() - 0.5 * b).powi(2) * t.sin(),
                f64::sin,
                (0.0, std::f64::consts::PI),
                n,
                0.0,
                false,
            )
        })
    }

    /// Ground energy of ∫ w|u'|² − β|u(0)|² over ∫ w|u|² on (0, T), Dirichlet at T.
    pub fn weighted_robin(w: impl Fn(f64) -> f64 + Copy, beta: f64, length: f64) -> Result<Extrapolated> {
        extrapolate(1000, |n| finite_volume(w, |_| 0.0, w, (0.0, length), n, beta, true))
    }
}

/// Recomputes every derived constant with its oracle.
pub fn build_fixtures(date: &str) -> Result<FixtureFile> {
    let mut records = BTreeMap::new();
    let mut put = |name: &str, value: f64, oracle: &str, grid: &str, order: Option<f64>| {
        records.insert(
            name.to_string(),
            FixtureRecord {
                value,
                oracle: oracle.to_string(),
                grid: grid.to_string(),
                extrapolation_order: order,
                date: date.to_string(),
            },
        );
    };
    let mont_grid = "finite differences on [-14,14], 2000/4000/8000 cells";
    for (name, zeta) in [("montgomery_lambda_0", 0.0), ("montgomery_lambda_m0_5", -0.5)] {
        let e = oracle::montgomery(zeta)?;
        put(name, e.limit, "finite differences + Richardson (order 2)", mont_grid, e.observed_order);
    }
    let eval = |z: f64| oracle::montgomery(z).map(|e| e.limit).unwrap_or(f64::NAN);
    let (a, b) = scan_bracket(-4.0, 1.0, 50, eval)?;
    let (zeta0, nu0) = golden_section(a, b, 1e-8, eval);
    let order = oracle::montgomery(zeta0)?.observed_order;
    put("montgomery_nu0", nu0, "golden section (tol 1e-8) on extrapolated λ(ζ)", mont_grid, order);
    put("montgomery_zeta0", zeta0, "golden section (tol 1e-8) on extrapolated λ(ζ)", mont_grid, order);

    let eval = |x: f64| oracle::degennes(x).map(|e| e.limit).unwrap_or(f64::NAN);
    let (a, b) = scan_bracket(0.0, 3.0, 30, eval)?;
    let (xi0, theta0) = golden_section(a, b, 1e-8, eval);
    let dg_grid = "cell-centered finite volumes on (0,20), 2000/4000/8000 cells";
    let order = oracle::degennes(xi0)?.observed_order;
    put("degennes_theta0", theta0, "golden section on extrapolated ground energy", dg_grid, order);
    put("degennes_xi0", xi0, "golden section on extrapolated ground energy", dg_grid, order);

    let th_grid = "cell-centered finite volumes on (0,pi), 1000/2000/4000 cells";
    let l1 = oracle::lambda_m(1, 2.0)?;
    put("lambda_1_b2", l1.limit, "finite volumes + Richardson (order 2)", th_grid, l1.observed_order);
    let mut best = (f64::INFINITY, 0i64, None);
    for m in -2..=6 {
        let e = oracle::lambda_m(m, 2.0)?;
        if e.limit < best.0 {
            best = (e.limit, m, e.observed_order);
        }
    }
    put("e_of_b_2", best.0, "min over m in [-2,6] of extrapolated lambda_m(2)", th_grid, best.2);
    put("e_of_b_2_mstar", best.1 as f64, "argmin of the same scan", th_grid, None);

    let w = oracle::weighted_robin(|t| 1.0 - 2.0 * t - t * t, 1.0, 0.4)?;
    put(
        "robin_weight_1m2tmt2_T0_4",
        w.limit,
        "finite volumes + Richardson (order 2), weight 1-2t-t^2, beta 1, Dirichlet at 0.4",
        "cell-centered finite volumes on (0,0.4), 1000/2000/4000 cells",
        w.observed_order,
    );
    Ok(FixtureFile {
        version: FIXTURE_VERSION,
        records,
    })
}
