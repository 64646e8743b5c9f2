use crate::error::{Error, Result};

/// Accumulates matrix entries; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    /// Adds `v` at (i, j) and, off the diagonal, at (j, i).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.add(i, j, v);
        if i != j {
            self.add(j, i, v);
        }
    }

    pub fn build(self) -> SparseSym {
        SparseSym::from_entries(self.n, self.entries)
    }
}

/// Square sparse matrix in CSR form, both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl SparseSym {
    fn from_entries(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(entries.len());
        let mut val: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn from_triplets(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let entries: Vec<_> = entries.into_iter().collect();
        if let Some(&(i, j, _)) = entries.iter().find(|(i, j, _)| *i >= n || *j >= n) {
            return Err(Error::Dimension(format!("entry ({i}, {j}) outside {n}x{n}")));
        }
        Ok(Self::from_entries(n, entries))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_entries(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn diagonal_matrix(d: &[f64]) -> Self {
        Self::from_entries(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    /// Symmetric tridiagonal matrix from its diagonal and first off-diagonal.
    pub fn tridiagonal(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        if off.len() + 1 != n {
            return Err(Error::Dimension(format!(
                "off-diagonal has length {}, expected {}",
                off.len(),
                n.saturating_sub(1)
            )));
        }
        let mut b = TripletBuilder::with_capacity(n, 3 * n);
        for (i, &d) in diag.iter().enumerate() {
            b.add(i, i, d);
        }
        for (i, &e) in off.iter().enumerate() {
            b.add_sym(i, i + 1, e);
        }
        Ok(b.build())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&j) {
            Ok(k) => self.val[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Off-diagonal at (i, i+1), for matrices of bandwidth one.
    pub fn super_diagonal(&self) -> Vec<f64> {
        (0..self.n.saturating_sub(1)).map(|i| self.get(i, i + 1)).collect()
    }

    pub fn half_bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j > i {
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        // entries present only below the diagonal
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j < i && self.get(j, i) == 0.0 {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// self + c·other
    pub fn add_scaled(&self, other: &SparseSym, c: f64) -> SparseSym {
        let mut entries = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            entries.extend(self.row(i).map(|(j, v)| (i, j, v)));
            entries.extend(other.row(i).map(|(j, v)| (i, j, c * v)));
        }
        Self::from_entries(self.n, entries)
    }

    /// Symmetric permutation: result[p, q] = self[perm[p], perm[q]].
    pub fn permuted(&self, perm: &[usize]) -> SparseSym {
        let mut inv = vec![0usize; self.n];
        for (p, &i) in perm.iter().enumerate() {
            inv[i] = p;
        }
        let mut entries = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            entries.extend(self.row(i).map(|(j, v)| (inv[i], inv[j], v)));
        }
        Self::from_entries(self.n, entries)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}
