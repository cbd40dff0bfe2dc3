//! Assembly of the sparse constraint system `A z = d` for a linear PDE
//! `Σ_m c_m u_m = b` on a grid.
//!
//! Rows come in four weighted families: the equation at every grid point,
//! Dirichlet values on the boundary set, finite-difference definitions of each
//! derivative variable, and forward/backward Taylor smoothness links between
//! neighbouring points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, IndexMaps, MultiIndexSet};
use crate::sparse::CsrMatrix;
use crate::stencil::Stencil;

/// Per-family row weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Weights {
    pub equation: f64,
    pub boundary: f64,
    pub derivative: f64,
    pub smoothness: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            equation: 1.0,
            boundary: 10.0,
            derivative: 1.0,
            smoothness: 1.0,
        }
    }
}

impl Weights {
    fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("equation", self.equation),
            ("boundary", self.boundary),
            ("derivative", self.derivative),
            ("smoothness", self.smoothness),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!("{name} weight must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

/// Coefficient fields `c_m` (in multi-index set order), right-hand side `b`
/// and boundary values `ω` (in boundary-set order).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSet {
    pub coeff: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub bnd: Vec<f64>,
}

impl FieldSet {
    pub fn zeros(n_m: usize, n_points: usize, n_boundary: usize) -> Self {
        Self {
            coeff: vec![vec![0.0; n_points]; n_m],
            rhs: vec![0.0; n_points],
            bnd: vec![0.0; n_boundary],
        }
    }

    /// Constant coefficients per multi-index, constant rhs and boundary value.
    pub fn constant(coeff: &[f64], rhs: f64, bnd: f64, n_points: usize, n_boundary: usize) -> Self {
        Self {
            coeff: coeff.iter().map(|&c| vec![c; n_points]).collect(),
            rhs: vec![rhs; n_points],
            bnd: vec![bnd; n_boundary],
        }
    }

    fn validate(&self, spec: &GridSpec, maps: &IndexMaps) -> Result<()> {
        let n = spec.n_points();
        if self.coeff.len() != maps.n_m() {
            return Err(Error::Shape(format!(
                "{} coefficient fields for {} multi-indices",
                self.coeff.len(),
                maps.n_m()
            )));
        }
        if self.coeff.iter().any(|c| c.len() != n) || self.rhs.len() != n {
            return Err(Error::Shape(format!("fields must have {n} entries")));
        }
        if self.bnd.len() != maps.boundary().len() {
            return Err(Error::Shape(format!(
                "{} boundary values for {} boundary points",
                self.bnd.len(),
                maps.boundary().len()
            )));
        }
        let nonfinite = |what: String, p: usize| Error::NonFinite {
            what,
            location: spec.unflatten(p).0[..spec.n_dims()].to_vec(),
        };
        for (k, c) in self.coeff.iter().enumerate() {
            if let Some(p) = c.iter().position(|v| !v.is_finite()) {
                return Err(nonfinite(format!("coefficient {k}"), p));
            }
        }
        if let Some(p) = self.rhs.iter().position(|v| !v.is_finite()) {
            return Err(nonfinite("rhs".into(), p));
        }
        if let Some(k) = self.bnd.iter().position(|v| !v.is_finite()) {
            return Err(nonfinite("boundary value".into(), maps.boundary()[k]));
        }
        Ok(())
    }
}

/// Assembled least-squares system with its layout.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub a: CsrMatrix,
    pub d: Vec<f64>,
    pub maps: IndexMaps,
    pub mset: MultiIndexSet,
    pub weights: Weights,
    pub fields: FieldSet,
}

impl LinearSystem {
    pub fn spec(&self) -> &GridSpec {
        self.maps.spec()
    }

    pub fn n_v(&self) -> usize {
        self.a.n_cols()
    }

    pub fn n_c(&self) -> usize {
        self.a.n_rows()
    }

    /// Position in `a.values()` of the equation entry for `M[m]` at `point`.
    /// Equation rows store every multi-index, zero or not, in set order.
    pub fn equation_entry(&self, m: usize, point: usize) -> usize {
        self.a.row_ptr()[self.maps.eq_row(point)] + m
    }
}

struct RowBuilder {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    d: Vec<f64>,
    scratch: Vec<(usize, f64)>,
}

impl RowBuilder {
    fn push(&mut self, rhs: f64, keep_zeros: bool) {
        self.scratch.sort_by_key(|e| e.0);
        let mut last = usize::MAX;
        for &(c, v) in &self.scratch {
            if c == last {
                *self.values.last_mut().unwrap() += v;
            } else {
                self.col_idx.push(c);
                self.values.push(v);
                last = c;
            }
        }
        if !keep_zeros {
            let start = *self.row_ptr.last().unwrap();
            let mut w = start;
            for r in start..self.values.len() {
                if self.values[r] != 0.0 {
                    self.values[w] = self.values[r];
                    self.col_idx[w] = self.col_idx[r];
                    w += 1;
                }
            }
            self.values.truncate(w);
            self.col_idx.truncate(w);
        }
        self.row_ptr.push(self.values.len());
        self.d.push(rhs);
        self.scratch.clear();
    }
}

/// Assembles the weighted constraint system for `spec`, `mset` and `fields`.
pub fn assemble(
    spec: &GridSpec,
    mset: &MultiIndexSet,
    fields: &FieldSet,
    weights: Weights,
) -> Result<LinearSystem> {
    spec.check_stencil_fit()?;
    weights.validate()?;
    let maps = IndexMaps::new(spec, mset)?;
    fields.validate(spec, &maps)?;
    let n = spec.n_points();
    let strides = spec.strides();
    let n_m = mset.len();

    let mut rb = RowBuilder {
        row_ptr: vec![0],
        col_idx: Vec::new(),
        values: Vec::new(),
        d: Vec::with_capacity(maps.n_c()),
        scratch: Vec::new(),
    };

    // equation rows
    let we = weights.equation;
    for p in 0..n {
        for k in 0..n_m {
            rb.scratch.push((maps.var_id(k, p), we * fields.coeff[k][p]));
        }
        rb.push(we * fields.rhs[p], true);
    }

    // boundary rows
    let wb = weights.boundary;
    for (k, &p) in maps.boundary().iter().enumerate() {
        rb.scratch.push((maps.var_id(0, p), wb));
        rb.push(wb * fields.bnd[k], false);
    }

    // derivative rows: 12 s^o z_m - 12 Σ w_k z_parent(i + k) = 0
    let wd = weights.derivative;
    for k in 1..n_m {
        let m = mset.get(k);
        let (parent, dim, order) = m.split_last().expect("non-phi multi-index");
        let parent_pos = mset
            .position(&parent)
            .ok_or_else(|| Error::MissingDerivative(parent.label(&spec.labels())))?;
        let size = spec.sizes()[dim];
        let stencils: Vec<Stencil> = (0..size)
            .map(|i| Stencil::for_position(order as usize, i, size))
            .collect();
        let diag = wd * 12.0 * spec.steps()[dim].powi(order as i32);
        for p in 0..n {
            let i = (p / strides[dim]) % size;
            rb.scratch.push((maps.var_id(k, p), diag));
            let st = &stencils[i];
            for (&off, &w) in st.offsets.iter().zip(&st.weights) {
                let q = (p as isize + off * strides[dim] as isize) as usize;
                rb.scratch.push((maps.var_id(parent_pos, q), -wd * 12.0 * w));
            }
            rb.push(0.0, false);
        }
    }

    // smoothness rows
    let ws = weights.smoothness;
    for blk in maps.smooth_blocks() {
        let s = spec.steps()[blk.dim];
        let size = spec.sizes()[blk.dim];
        let stride = strides[blk.dim];
        for sign in [1.0, -1.0] {
            for p in 0..n {
                let i = (p / stride) % size;
                let q = if sign > 0.0 {
                    if i + 1 == size {
                        continue;
                    }
                    p + stride
                } else {
                    if i == 0 {
                        continue;
                    }
                    p - stride
                };
                rb.scratch.push((maps.var_id(0, p), ws));
                rb.scratch.push((maps.var_id(blk.first, p), ws * sign * s));
                if let Some(second) = blk.second {
                    rb.scratch.push((maps.var_id(second, p), ws * 0.5 * s * s));
                }
                rb.scratch.push((maps.var_id(0, q), -ws));
                rb.push(0.0, false);
            }
        }
    }

    debug_assert_eq!(rb.d.len(), maps.n_c());
    let a = CsrMatrix::from_parts(maps.n_c(), maps.n_v(), rb.row_ptr, rb.col_idx, rb.values)?;
    Ok(LinearSystem {
        a,
        d: rb.d,
        maps,
        mset: mset.clone(),
        weights,
        fields: fields.clone(),
    })
}

/// `d − A z`.
pub fn residual(sys: &LinearSystem, z: &[f64]) -> Result<Vec<f64>> {
    let az = sys.a.spmv(z)?;
    Ok(sys.d.iter().zip(&az).map(|(d, a)| d - a).collect())
}
