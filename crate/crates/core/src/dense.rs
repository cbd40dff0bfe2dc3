//! Direct solvers: dense least squares for small systems and an envelope
//! Cholesky factorization for sparse symmetric positive definite matrices.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Relative pivot threshold for rank checks.
const RANK_TOL: f64 = 1e-12;

/// Least-squares solution `z* = argmin ‖Az − d‖` with dual `λ* = d − A z*`.
#[derive(Clone, Debug)]
pub struct Lstsq {
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// Dense least squares via Householder QR; errors when `A` is numerically
/// rank deficient, reporting the smallest pivot.
pub fn dense_lstsq(a: &[Vec<f64>], d: &[f64]) -> Result<Lstsq> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    if d.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::Shape("dense_lstsq: ragged matrix or rhs length".into()));
    }
    if m < n {
        return Err(Error::Shape(format!("dense_lstsq: {m}x{n} is underdetermined")));
    }
    let mat = DMatrix::from_fn(m, n, |i, j| a[i][j]);
    let qr = mat.clone().qr();
    let r = qr.r();
    let max_pivot = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if let Some((column, pivot)) = (0..n)
        .map(|i| (i, r[(i, i)].abs()))
        .filter(|&(_, p)| p <= RANK_TOL * max_pivot.max(f64::MIN_POSITIVE))
        .min_by(|a, b| a.1.total_cmp(&b.1))
    {
        return Err(Error::RankDeficient { pivot, column });
    }
    let qtd = qr.q().transpose() * DVector::from_column_slice(d);
    let z = r
        .solve_upper_triangular(&qtd)
        .ok_or(Error::RankDeficient { pivot: 0.0, column: 0 })?;
    let resid = DVector::from_column_slice(d) - &mat * &z;
    Ok(Lstsq {
        z: z.as_slice().to_vec(),
        lambda: resid.as_slice().to_vec(),
    })
}

/// Dense SPD solve through Cholesky.
pub fn dense_solve_spd(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let mat = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let chol = mat.cholesky().ok_or(Error::RankDeficient {
        pivot: 0.0,
        column: 0,
    })?;
    Ok(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
}

/// Reverse Cuthill–McKee ordering of a structurally symmetric matrix.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(m: &CsrMatrix) -> Vec<usize> {
    let n = m.n_rows();
    let degree: Vec<usize> = (0..n).map(|r| m.row(r).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut nbrs = Vec::new();
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .expect("unvisited node");
        let start = pseudo_peripheral(m, seed, &degree);
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(m.row(v).0.iter().copied().filter(|&u| !visited[u]));
            nbrs.sort_by_key(|&u| (degree[u], u));
            for &u in &nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// A few rounds of BFS to find a node of large eccentricity in the component of `seed`.
fn pseudo_peripheral(m: &CsrMatrix, seed: usize, degree: &[usize]) -> usize {
    let n = m.n_rows();
    let mut node = seed;
    let mut best_ecc = 0;
    let mut level = vec![usize::MAX; n];
    for _ in 0..4 {
        let mut touched = vec![node];
        level[node] = 0;
        let mut queue = VecDeque::from([node]);
        let mut last = node;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &u in m.row(v).0 {
                if level[u] == usize::MAX {
                    level[u] = level[v] + 1;
                    touched.push(u);
                    queue.push_back(u);
                }
            }
        }
        let ecc = level[last];
        // pick the lowest-degree node on the last level
        let far = touched
            .iter()
            .copied()
            .filter(|&u| level[u] == ecc)
            .min_by_key(|&u| (degree[u], u))
            .unwrap_or(last);
        for &u in &touched {
            level[u] = usize::MAX;
        }
        if ecc <= best_ecc {
            break;
        }
        best_ecc = ecc;
        node = far;
    }
    node
}

/// Envelope (skyline) Cholesky factor `P M Pᵀ = L Lᵀ` of a sparse SPD matrix.
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors with a reverse Cuthill–McKee ordering.
    pub fn factor(m: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(m);
        Self::factor_with_permutation(m, perm)
    }

    pub fn factor_with_permutation(m: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = m.n_rows();
        if m.n_cols() != n || perm.len() != n {
            return Err(Error::Shape("skyline Cholesky needs a square matrix".into()));
        }
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0; n];
        for i in 0..n {
            first[i] = m.row(perm[i]).0.iter().map(|&c| inv[c]).min().unwrap_or(i).min(i);
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            let (cols, vals) = m.row(perm[i]);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (head, tail) = data.split_at_mut(start[i]);
            let row_i = &mut tail[..i - fi + 1];
            let orig_diag = row_i[i - fi];
            for j in fi..i {
                let fj = first[j];
                let row_j = &head[start[j]..start[j + 1]];
                let lo = fi.max(fj);
                let s = row_i[j - fi]
                    - dot_slices(&row_i[lo - fi..j - fi], &row_j[lo - fj..j - fj]);
                row_i[j - fi] = s / row_j[j - fj];
            }
            let off = &row_i[..i - fi];
            let s = row_i[i - fi] - dot_slices(off, off);
            if !(s > RANK_TOL * orig_diag.abs()) || !s.is_finite() {
                return Err(Error::RankDeficient {
                    pivot: s,
                    column: perm[i],
                });
            }
            row_i[i - fi] = s.sqrt();
        }
        Ok(Self {
            perm,
            first,
            start,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Stored envelope entries.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length");
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s = y[i] - dot_slices(&row[..i - fi], &y[fi..i]);
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (yk, &l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[inline]
fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorises
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}
