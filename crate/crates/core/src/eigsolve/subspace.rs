use super::{dot, rcm_ordering, SkylineLdl, SolverMeta, Spectrum, SymmetricOperatorPair};
use super::{DEFAULT_TOLERANCE, MAX_ITERATIONS};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEED: u64 = 0x5eed_0f_5eed;

/// k eigenpairs nearest above `shift`, by shift-invert block subspace iteration
/// with Rayleigh–Ritz projection.
pub fn solve_sparse(pair: &SymmetricOperatorPair, k: usize, shift: f64) -> Result<Spectrum> {
    check_count(pair, k)?;
    let factor = factor_at(pair, shift)?;
    iterate(pair, &factor, k, shift, MAX_ITERATIONS)?.map_err(|(_, log)| Error::Solver {
        message: format!("subspace iteration did not converge in {MAX_ITERATIONS} iterations"),
        log,
    })
}

/// The k lowest eigenpairs, given a lower bound `floor` of the spectrum.
///
/// A short pass shifted at the floor yields a Ritz value θ₀ ≥ λ₀; the shift is then raised
/// to just below θ₀ as long as the inertia at the new shift shows no eigenvalue beneath it.
/// Near-degenerate clusters converge much faster from there.
pub fn solve_sparse_from_floor(pair: &SymmetricOperatorPair, k: usize, floor: f64) -> Result<Spectrum> {
    check_count(pair, k)?;
    let factor = factor_at(pair, floor)?;
    if factor.negative_count() > 0 {
        return Err(Error::InvalidInput(format!(
            "{} eigenvalues lie below the claimed floor {floor}",
            factor.negative_count()
        )));
    }
    let ritz = match iterate(pair, &factor, k, floor, PROBE_ITERATIONS)? {
        Ok(done) => return Ok(done),
        Err((ritz, _)) => ritz,
    };
    let mut log = Vec::new();
    if let Some(&top) = ritz.iter().find(|&&r| r > floor) {
        let span = top - floor;
        for fraction in [1e-6, 1e-4, 1e-2, 0.1] {
            let shift = top - fraction * span;
            let raised = match factor_at(pair, shift) {
                Ok(f) if f.negative_count() == 0 => f,
                _ => continue,
            };
            match iterate(pair, &raised, k, shift, MAX_ITERATIONS)? {
                Ok(done) => return Ok(done),
                Err((_, l)) => {
                    log = l;
                    break;
                }
            }
        }
    }
    iterate(pair, &factor, k, floor, MAX_ITERATIONS)?.map_err(|(_, l)| Error::Solver {
        message: format!("subspace iteration did not converge in {MAX_ITERATIONS} iterations"),
        log: if log.is_empty() { l } else { log },
    })
}

const PROBE_ITERATIONS: usize = 12;

fn check_count(pair: &SymmetricOperatorPair, k: usize) -> Result<()> {
    let n = pair.n();
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("requested {k} eigenpairs of an {n}x{n} pair")));
    }
    Ok(())
}

fn factor_at(pair: &SymmetricOperatorPair, shift: f64) -> Result<SkylineLdl> {
    let shifted = pair.stiffness().add_scaled(pair.mass(), -shift);
    let perm = rcm_ordering(&shifted);
    SkylineLdl::factor(&shifted, Some(perm)).map_err(|e| match e {
        Error::ShiftSingular { .. } => Error::ShiftSingular { shift },
        other => other,
    })
}

/// Runs at most `budget` iterations; on exhaustion returns the last sorted Ritz values
/// and the log instead of a spectrum.
#[allow(clippy::type_complexity)]
fn iterate(
    pair: &SymmetricOperatorPair,
    factor: &SkylineLdl,
    k: usize,
    shift: f64,
    budget: usize,
) -> Result<std::result::Result<Spectrum, (Vec<f64>, Vec<String>)>> {
    let n = pair.n();
    let m = pair.mass();
    let a = pair.stiffness();
    let below = factor.negative_count();
    let block = n.min((2 * k).max(k + 8) + below.min(2 * k));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();

    let mut log = Vec::new();
    let mut last_ritz: Vec<f64> = Vec::new();
    for it in 0..budget {
        let mut y: Vec<Vec<f64>> = x
            .par_iter()
            .map(|xi| factor.solve(&m.mul_vec(xi)))
            .collect();
        m_orthonormalize(m, &mut y, &mut rng)?;
        let ay: Vec<Vec<f64>> = y.par_iter().map(|yi| a.mul_vec(yi)).collect();
        let p = y.len();
        let mut t = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let v = 0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i]));
                t[(i, j)] = v;
                t[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut idx: Vec<usize> = (0..p).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let ritz: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let new_x: Vec<Vec<f64>> = idx
            .par_iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (r, yr) in y.iter().enumerate() {
                    let s = eig.eigenvectors[(r, c)];
                    if s != 0.0 {
                        for (vi, yi) in v.iter_mut().zip(yr) {
                            *vi += s * yi;
                        }
                    }
                }
                v
            })
            .collect();
        x = new_x;

        let slack = 1e-12 * shift.abs().max(1.0);
        let wanted: Vec<usize> = (0..p).filter(|&i| ritz[i] >= shift - slack).take(k).collect();
        if wanted.len() == k {
            let checks: Vec<(f64, f64)> = wanted
                .par_iter()
                .map(|&i| {
                    (
                        pair.residual(ritz[i], &x[i]),
                        pair.residual_floor(ritz[i], &x[i]),
                    )
                })
                .collect();
            let worst = checks.iter().map(|c| c.0).fold(0.0, f64::max);
            log.push(format!("iteration {it}: worst residual {worst:e}"));
            let stagnant = !last_ritz.is_empty()
                && wanted
                    .iter()
                    .all(|&i| (ritz[i] - last_ritz[i]).abs() <= 4.0 * f64::EPSILON * ritz[i].abs());
            let converged = checks
                .iter()
                .all(|(r, f)| *r <= DEFAULT_TOLERANCE.max(*f));
            let floor_converged = stagnant
                && checks.iter().all(|(r, f)| *r <= 10.0 * DEFAULT_TOLERANCE.max(*f));
            if converged || floor_converged {
                let tolerance = checks
                    .iter()
                    .map(|(r, f)| DEFAULT_TOLERANCE.max(*f).max(*r))
                    .fold(DEFAULT_TOLERANCE, f64::max);
                let eigenvectors: Vec<Vec<f64>> = wanted.iter().map(|&i| x[i].clone()).collect();
                return Ok(Ok(Spectrum {
                    eigenvalues: wanted.iter().map(|&i| ritz[i]).collect(),
                    eigenvectors: Some(eigenvectors),
                    residuals: checks.iter().map(|c| c.0).collect(),
                    meta: SolverMeta {
                        solver: "shift-invert-subspace".into(),
                        iterations: it + 1,
                        shift: Some(shift),
                        tolerance,
                        grid: String::new(),
                    },
                }));
            }
        } else {
            log.push(format!("iteration {it}: only {} Ritz values above shift", wanted.len()));
        }
        last_ritz = ritz;
    }
    Ok(Err((last_ritz, log)))
}

/// Orthonormalizes the columns in the M inner product (Cholesky QR, with a
/// Gram–Schmidt fallback that replaces dependent columns by random ones).
fn m_orthonormalize(
    m: &super::SparseSym,
    y: &mut Vec<Vec<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let p = y.len();
    let n = y[0].len();
    for _pass in 0..2 {
        let my: Vec<Vec<f64>> = y.par_iter().map(|v| m.mul_vec(v)).collect();
        let mut g = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let v = dot(&y[i], &my[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        if let Some(ch) = g.clone().cholesky() {
            let l = ch.l();
            let cond_ok = (0..p).all(|i| l[(i, i)] > 1e-7 * g[(i, i)].sqrt().max(f64::MIN_POSITIVE));
            if cond_ok {
                // Y ← Y L⁻ᵀ
                let linv = l.try_inverse().ok_or_else(|| Error::InvalidMass("Gram factor not invertible".into()))?;
                let mut out = vec![vec![0.0; n]; p];
                for (c, oc) in out.iter_mut().enumerate() {
                    for r in 0..=c {
                        let s = linv[(c, r)];
                        if s != 0.0 {
                            for (o, v) in oc.iter_mut().zip(&y[r]) {
                                *o += s * v;
                            }
                        }
                    }
                }
                *y = out;
                continue;
            }
        }
        // modified Gram–Schmidt in the M inner product
        for i in 0..p {
            for attempt in 0..3 {
                for j in 0..i {
                    let mj = m.mul_vec(&y[j]);
                    let c = dot(&y[i], &mj);
                    let (head, tail) = y.split_at_mut(i);
                    for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                        *a -= c * b;
                    }
                }
                let norm = dot(&y[i], &m.mul_vec(&y[i])).sqrt();
                if norm.is_finite() && norm > 1e-12 {
                    for v in &mut y[i] {
                        *v /= norm;
                    }
                    break;
                }
                if attempt == 2 {
                    return Err(Error::InvalidMass("mass matrix is not positive definite".into()));
                }
                y[i] = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigsolve::{solve_tridiagonal, SparseSym, TripletBuilder};
    use std::f64::consts::PI;

    fn laplacian_square(nx: usize) -> SymmetricOperatorPair {
        let h = 1.0 / (nx as f64 + 1.0);
        let n = nx * nx;
        let mut b = TripletBuilder::with_capacity(n, 5 * n);
        for i in 0..nx {
            for j in 0..nx {
                let p = i * nx + j;
                b.add(p, p, 4.0 / (h * h));
                if i + 1 < nx {
                    b.add_sym(p, p + nx, -1.0 / (h * h));
                }
                if j + 1 < nx {
                    b.add_sym(p, p + 1, -1.0 / (h * h));
                }
            }
        }
        SymmetricOperatorPair::new(b.build(), SparseSym::identity(n)).unwrap()
    }

    #[test]
    fn unit_square_dirichlet() {
        let p = laplacian_square(200);
        let s = solve_sparse(&p, 2, 0.0).unwrap();
        assert!((s.eigenvalues[0] / (2.0 * PI * PI) - 1.0).abs() < 1e-3);
        assert!((s.eigenvalues[1] / (5.0 * PI * PI) - 1.0).abs() < 1e-3);
        assert!(s.residuals.iter().all(|&r| r <= s.meta.tolerance));
    }

    #[test]
    fn agrees_with_tridiagonal_path() {
        let n = 400;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + (i as f64 * 0.37).sin()).collect();
        let a = SparseSym::tridiagonal(&diag, &vec![-1.0; n - 1]).unwrap();
        let mdiag: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * (i as f64 * 0.11).cos()).collect();
        let m = SparseSym::tridiagonal(&mdiag, &vec![0.1; n - 1]).unwrap();
        let p = SymmetricOperatorPair::new(a, m).unwrap();
        let s1 = solve_tridiagonal(&p, 4).unwrap();
        let s2 = solve_sparse(&p, 4, -1.0).unwrap();
        for (x, y) in s1.eigenvalues.iter().zip(&s2.eigenvalues) {
            assert!((x - y).abs() < 1e-9, "{x} {y}");
        }
    }

    #[test]
    fn eigenvectors_are_mass_orthonormal() {
        let p = laplacian_square(30);
        let s = solve_sparse(&p, 4, 0.0).unwrap();
        let v = s.eigenvectors.unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let g = dot(&v[i], &p.mass().mul_vec(&v[j]));
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shift_between_clusters_skips_lower_values() {
        let a = SparseSym::diagonal_matrix(&(0..50).map(|i| i as f64).collect::<Vec<_>>());
        let p = SymmetricOperatorPair::new(a, SparseSym::identity(50)).unwrap();
        let s = solve_sparse(&p, 3, 10.5).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        for (v, e) in s.eigenvalues.iter().zip([11.0, 12.0, 13.0]) {
            assert!((v - e).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_shift_reported() {
        let a = SparseSym::diagonal_matrix(&[1.0, 2.0, 3.0]);
        let p = SymmetricOperatorPair::new(a, SparseSym::identity(3)).unwrap();
        assert!(matches!(solve_sparse(&p, 1, 2.0), Err(Error::ShiftSingular { shift }) if shift == 2.0));
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let p = laplacian_square(25);
        let a = solve_sparse(&p, 3, 0.0).unwrap();
        let b = solve_sparse(&p, 3, 0.0).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
    }

    #[test]
    fn floor_start_matches_plain_shift() {
        // a tight cluster far above the floor
        let d: Vec<f64> = (0..300).map(|i| if i < 40 { 5.0 + 1e-7 * i as f64 } else { 6.0 + i as f64 }).collect();
        let p = SymmetricOperatorPair::new(SparseSym::diagonal_matrix(&d), SparseSym::identity(300)).unwrap();
        let s = solve_sparse_from_floor(&p, 3, 0.0).unwrap();
        for (v, e) in s.eigenvalues.iter().zip(&d) {
            assert!((v - e).abs() < 1e-12, "{v} {e}");
        }
        assert!(matches!(solve_sparse_from_floor(&p, 1, 5.5), Err(Error::InvalidInput(_))));
    }
}
