//! Compressed sparse row storage and the small kernel set the solver needs.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Default cap on the number of stored entries produced by [`CsrMatrix::ata`].
pub const DEFAULT_NNZ_BUDGET: usize = 400_000_000;

/// CSR matrix with sorted, duplicate-free column indices in every row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from raw parts, checking the canonical-form invariants.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 {
            return Err(Error::Shape("row_ptr must have n_rows + 1 entries starting at 0".into()));
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != col_idx.len() {
            return Err(Error::Shape("row_ptr, col_idx and values disagree on nnz".into()));
        }
        for r in 0..n_rows {
            if row_ptr[r] > row_ptr[r + 1] {
                return Err(Error::Shape(format!("row_ptr decreases at row {r}")));
            }
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Shape(format!("row {r} columns not strictly increasing")));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::Shape(format!("row {r} has a column out of range")));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<_> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Shape(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows.len(), n_cols, &t).expect("dense input is in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    /// Position of `(r, c)` in the value array, if stored.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (cols, _) = self.row(r);
        cols.binary_search(&c).ok().map(|k| self.row_ptr[r] + k)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }

    /// `y = M x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols || y.len() != self.n_rows {
            return Err(Error::Shape(format!(
                "spmv: matrix {}x{}, x has {}, y has {}",
                self.n_rows,
                self.n_cols,
                x.len(),
                y.len()
            )));
        }
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
        Ok(())
    }

    /// `y = Mᵀ x` without forming the transpose.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_rows {
            return Err(Error::Shape(format!(
                "spmv_transpose: matrix has {} rows, x has {}",
                self.n_rows,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = next[c];
                col_idx[k] = r;
                values[k] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Normal matrix `AᵀA` with the default nnz budget.
    pub fn ata(&self) -> Result<CsrMatrix> {
        self.ata_with_budget(DEFAULT_NNZ_BUDGET)
    }

    /// Normal matrix `AᵀA` (row-wise Gustavson product on `Aᵀ`), stored with
    /// `(i, j)` and `(j, i)` entries averaged.
    pub fn ata_with_budget(&self, budget: usize) -> Result<CsrMatrix> {
        let at = self.transpose();
        let n = self.n_cols;
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; n];
        let mut marker = vec![usize::MAX; n];
        let mut touched = Vec::new();
        for i in 0..n {
            touched.clear();
            let (ks, avals) = at.row(i);
            for (&k, &aki) in ks.iter().zip(avals) {
                let (js, vals) = self.row(k);
                for (&j, &akj) in js.iter().zip(vals) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += aki * akj;
                }
            }
            touched.sort_unstable();
            if col_idx.len() + touched.len() > budget {
                return Err(Error::NnzBudget {
                    nnz: col_idx.len() + touched.len(),
                    budget,
                });
            }
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr.push(col_idx.len());
        }
        let mut out = CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr,
            col_idx,
            values,
        };
        out.symmetrize();
        Ok(out)
    }

    /// Replaces each stored pair `(i, j)`, `(j, i)` by its average. The
    /// pattern must already be structurally symmetric.
    fn symmetrize(&mut self) {
        let t = self.transpose();
        debug_assert_eq!(t.col_idx, self.col_idx);
        for (v, tv) in self.values.iter_mut().zip(&t.values) {
            *v = 0.5 * (*v + *tv);
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|r| self.get(r, r))
            .collect()
    }

    /// Positions of the diagonal entries in the value array; errors on a
    /// missing or zero diagonal.
    pub fn diagonal_positions(&self) -> Result<Vec<usize>> {
        (0..self.n_rows)
            .map(|r| match self.position(r, r) {
                Some(k) if self.values[k] != 0.0 => Ok(k),
                _ => Err(Error::ZeroDiagonal { row: r }),
            })
            .collect()
    }

    /// Scales row `r` in place.
    pub fn scale_row(&mut self, r: usize, alpha: f64) {
        for v in &mut self.values[self.row_ptr[r]..self.row_ptr[r + 1]] {
            *v *= alpha;
        }
    }

    /// Writes Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:?}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }

    /// Reads Matrix Market coordinate format (`general` or `symmetric`).
    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<CsrMatrix> {
        let mut lines = r.lines();
        let mut offset = 0usize;
        let header = lines
            .next()
            .ok_or(Error::Parse {
                offset,
                message: "empty file".into(),
            })??;
        if !header.starts_with("%%MatrixMarket matrix coordinate") {
            return Err(Error::Parse {
                offset,
                message: "not a coordinate Matrix Market file".into(),
            });
        }
        let symmetric = header.contains("symmetric");
        offset += header.len() + 1;
        let mut dims: Option<(usize, usize, usize)> = None;
        let mut triplets = Vec::new();
        for line in lines {
            let line = line?;
            let here = offset;
            offset += line.len() + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                offset: here,
                message: m.to_string(),
            };
            let parts: Vec<&str> = t.split_whitespace().collect();
            if dims.is_none() {
                if parts.len() != 3 {
                    return Err(bad("expected `rows cols nnz`"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| bad("bad size"));
                dims = Some((p(parts[0])?, p(parts[1])?, p(parts[2])?));
                continue;
            }
            if parts.len() != 3 {
                return Err(bad("expected `row col value`"));
            }
            let i = parts[0].parse::<usize>().map_err(|_| bad("bad row"))?;
            let j = parts[1].parse::<usize>().map_err(|_| bad("bad column"))?;
            let v = parts[2].parse::<f64>().map_err(|_| bad("bad value"))?;
            if i == 0 || j == 0 {
                return Err(bad("indices are 1-based"));
            }
            triplets.push((i - 1, j - 1, v));
            if symmetric && i != j {
                triplets.push((j - 1, i - 1, v));
            }
        }
        let (n_rows, n_cols, _) = dims.ok_or(Error::Parse {
            offset,
            message: "missing size line".into(),
        })?;
        CsrMatrix::from_triplets(n_rows, n_cols, &triplets)
    }
}

/// Forward Gauss-Seidel sweeps on `M x = b`, in row order.
pub fn gauss_seidel(m: &CsrMatrix, x: &mut [f64], b: &[f64], sweeps: usize) -> Result<()> {
    let diag = m.diagonal_positions()?;
    gauss_seidel_with_diag(m, &diag, x, b, sweeps)
}

/// [`gauss_seidel`] with precomputed diagonal positions.
pub fn gauss_seidel_with_diag(
    m: &CsrMatrix,
    diag: &[usize],
    x: &mut [f64],
    b: &[f64],
    sweeps: usize,
) -> Result<()> {
    if x.len() != m.n_cols || b.len() != m.n_rows || m.n_rows != m.n_cols {
        return Err(Error::Shape("gauss_seidel needs a square system".into()));
    }
    for _ in 0..sweeps {
        for r in 0..m.n_rows {
            let (cols, vals) = m.row(r);
            let mut s = b[r];
            for (&c, &v) in cols.iter().zip(vals) {
                s -= v * x[c];
            }
            // s is the full row residual, so this equals (b_r - Σ_{j≠r} m_rj x_j) / m_rr
            x[r] += s / m.values[diag[r]];
        }
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
