use super::SparseSym;
use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Envelope (skyline) LDLᵀ factorization without pivoting.
///
/// Adequate for the shifted matrices A − σM used by shift-invert iteration:
/// they are symmetric and, with σ below the spectrum, positive definite.
#[derive(Debug, Clone)]
pub struct SkylineLdl {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl SkylineLdl {
    /// Factors `a` after the symmetric permutation `perm` (identity when `None`).
    pub fn factor(a: &SparseSym, perm: Option<Vec<usize>>) -> Result<Self> {
        let n = a.n();
        let perm = perm.unwrap_or_else(|| (0..n).collect());
        let pa = if perm.iter().enumerate().all(|(i, &p)| i == p) {
            a.clone()
        } else {
            a.permuted(&perm)
        };
        let mut first = vec![0usize; n];
        for (i, f) in first.iter_mut().enumerate() {
            *f = pa.row(i).map(|(j, _)| j).filter(|&j| j <= i).min().unwrap_or(i);
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut l = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        let mut diag_a = vec![0.0; n];
        let mut row_scale = vec![0.0f64; n];
        for i in 0..n {
            for (j, v) in pa.row(i) {
                row_scale[i] = row_scale[i].max(v.abs());
                if j < i {
                    l[start[i] + j - first[i]] = v;
                } else if j == i {
                    diag_a[i] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = 0.0;
                if k0 < j {
                    let ri = &l[si + k0 - fi..si + j - fi];
                    let rj = &l[start[j] + k0 - fj..start[j] + j - fj];
                    s = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
                }
                l[si + j - fi] -= s;
            }
            let mut di = diag_a[i];
            for j in fi..i {
                let g = l[si + j - fi];
                let lij = g / d[j];
                di -= g * lij;
                l[si + j - fi] = lij;
            }
            if !di.is_finite() || di.abs() <= 64.0 * f64::EPSILON * row_scale[i].max(f64::MIN_POSITIVE) {
                return Err(Error::ShiftSingular { shift: f64::NAN });
            }
            d[i] = di;
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            l,
            d,
        })
    }

    /// Number of negative pivots, equal to the number of negative eigenvalues.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    pub fn envelope_size(&self) -> usize {
        self.l.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&x[fi..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            for (xj, lij) in x[fi..i].iter_mut().zip(row) {
                *xj -= lij * xi;
            }
        }
        let mut out = vec![0.0; n];
        for (p, &i) in self.perm.iter().enumerate() {
            out[i] = x[p];
        }
        out
    }
}

/// Reverse Cuthill–McKee ordering of the sparsity graph of `a`.
pub fn rcm_ordering(a: &SparseSym) -> Vec<usize> {
    let n = a.n();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(|r| r.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |root: usize| -> (usize, usize) {
        let mut level = vec![usize::MAX; n];
        let mut q = VecDeque::new();
        let mut comp = Vec::new();
        level[root] = 0;
        q.push_back(root);
        while let Some(u) = q.pop_front() {
            comp.push(u);
            for &v in &adj[u] {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        let depth = comp.iter().map(|&u| level[u]).max().unwrap_or(0);
        let last = comp
            .iter()
            .copied()
            .filter(|&u| level[u] == depth)
            .min_by_key(|&u| degree[u])
            .unwrap_or(root);
        (last, depth)
    };
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .unwrap();
        // pseudo-peripheral node search
        let mut root = seed;
        let (mut far, mut depth) = bfs_levels(root);
        for _ in 0..8 {
            let (far2, depth2) = bfs_levels(far);
            if depth2 <= depth {
                break;
            }
            root = far;
            far = far2;
            depth = depth2;
        }
        let mut q = VecDeque::new();
        visited[root] = true;
        q.push_back(root);
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                q.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigsolve::TripletBuilder;

    fn laplacian_2d(nx: usize) -> SparseSym {
        let n = nx * nx;
        let mut b = TripletBuilder::new(n);
        for i in 0..nx {
            for j in 0..nx {
                let p = i * nx + j;
                b.add(p, p, 4.0);
                if i + 1 < nx {
                    b.add_sym(p, p + nx, -1.0);
                }
                if j + 1 < nx {
                    b.add_sym(p, p + 1, -1.0);
                }
            }
        }
        b.build()
    }

    #[test]
    fn solve_matches_matvec() {
        let a = laplacian_2d(9);
        let x: Vec<f64> = (0..a.n()).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let b = a.mul_vec(&x);
        for perm in [None, Some(rcm_ordering(&a))] {
            let f = SkylineLdl::factor(&a, perm).unwrap();
            let y = f.solve(&b);
            let err = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-11, "err {err}");
            assert_eq!(f.negative_count(), 0);
        }
    }

    #[test]
    fn inertia_counts_negative_eigenvalues() {
        // eigenvalues of tridiag(2,-1) are 2 - 2cos(kπ/(n+1)); shift 1 leaves those below 1
        let n = 20;
        let a = SparseSym::tridiagonal(&vec![2.0 - 1.1; n], &vec![-1.0; n - 1]).unwrap();
        let f = SkylineLdl::factor(&a, None).unwrap();
        let expected = (1..=n)
            .filter(|&k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos() < 1.1)
            .count();
        assert_eq!(f.negative_count(), expected);
    }

    #[test]
    fn rcm_is_a_permutation_and_keeps_band_narrow() {
        let a = laplacian_2d(12);
        let mut p = rcm_ordering(&a);
        let pa = a.permuted(&p);
        assert!(pa.half_bandwidth() <= 13);
        p.sort_unstable();
        assert!(p.iter().enumerate().all(|(i, &v)| i == v));
    }

    #[test]
    fn singular_matrix_reported() {
        let a = SparseSym::tridiagonal(&[1.0, 2.0, 1.0], &[-1.0, -1.0]).unwrap();
        assert!(matches!(
            SkylineLdl::factor(&a, None),
            Err(Error::ShiftSingular { .. })
        ));
    }
}
