//! Geometric multigrid V-cycle over rediscretized normal-equation systems.
//!
//! Each coarser level halves every grid dimension and doubles its step. The
//! PDE fields are restricted to the coarse grid and the constraint system is
//! assembled again there, so level `k` holds `N_k = A_kᵀ A_k`. The coarsest
//! level is factored once and solved directly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, FieldSet, LinearSystem, Weights};
use crate::dense::SkylineCholesky;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, IndexMaps, MultiIndexSet};
use crate::sparse::{gauss_seidel_with_diag, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultigridConfig {
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    /// V-cycles per preconditioner application.
    pub cycles: usize,
    /// Target size of the coarsest grid in its smallest dimension.
    pub coarsest: usize,
    pub smoother: Smoother,
}

/// Relaxation used on every level but the coarsest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoother {
    /// Gauss–Seidel over grid points, updating all variables of a point together.
    PointBlock,
    /// Scalar Gauss–Seidel over rows.
    Pointwise,
}

impl Default for MultigridConfig {
    fn default() -> Self {
        Self {
            pre_sweeps: 2,
            post_sweeps: 2,
            cycles: 1,
            coarsest: 8,
            smoother: Smoother::Pointwise,
        }
    }
}

/// One operator on a line: for every output index, `(input index, weight)` pairs.
type LineOp = Vec<Vec<(usize, f64)>>;

fn prolong_line(n_coarse: usize, n_fine: usize) -> LineOp {
    (0..n_fine)
        .map(|f| {
            let c = f / 2;
            if f % 2 == 0 {
                vec![(c.min(n_coarse - 1), 1.0)]
            } else if c + 1 < n_coarse {
                vec![(c, 0.5), (c + 1, 0.5)]
            } else {
                vec![(c, 1.0)]
            }
        })
        .collect()
}

/// Full weighting: the transpose of [`prolong_line`] with rows normalised to sum to one.
fn restrict_line(n_coarse: usize, n_fine: usize) -> LineOp {
    let p = prolong_line(n_coarse, n_fine);
    let mut r: LineOp = vec![Vec::new(); n_coarse];
    for (f, row) in p.iter().enumerate() {
        for &(c, w) in row {
            r[c].push((f, w));
        }
    }
    for row in &mut r {
        let s: f64 = row.iter().map(|e| e.1).sum();
        for e in row.iter_mut() {
            e.1 /= s;
        }
    }
    r
}

/// Applies a line operator along `dim` of a row-major field.
fn apply_along(field: &[f64], sizes: &[usize], dim: usize, op: &LineOp) -> Vec<f64> {
    let n_in = sizes[dim];
    let n_out = op.len();
    let inner: usize = sizes[dim + 1..].iter().product();
    let outer: usize = sizes[..dim].iter().product();
    let mut out = vec![0.0; outer * n_out * inner];
    for o in 0..outer {
        let src = &field[o * n_in * inner..(o + 1) * n_in * inner];
        let dst = &mut out[o * n_out * inner..(o + 1) * n_out * inner];
        for (k, row) in op.iter().enumerate() {
            let d = &mut dst[k * inner..(k + 1) * inner];
            for &(i, w) in row {
                for (dv, sv) in d.iter_mut().zip(&src[i * inner..(i + 1) * inner]) {
                    *dv += w * sv;
                }
            }
        }
    }
    out
}

fn check_pair(fine: &GridSpec, coarse: &GridSpec) -> Result<()> {
    if fine.n_dims() != coarse.n_dims()
        || fine
            .sizes()
            .iter()
            .zip(coarse.sizes())
            .any(|(&f, &c)| f != 2 * c || c == 0)
    {
        return Err(Error::Shape(format!(
            "grids {:?} and {:?} are not a factor-2 pair",
            fine.sizes(),
            coarse.sizes()
        )));
    }
    Ok(())
}

fn transfer(field: &[f64], from: &GridSpec, to: &GridSpec, restrict: bool) -> Vec<f64> {
    let mut sizes = from.sizes().to_vec();
    let mut cur = field.to_vec();
    for dim in 0..from.n_dims() {
        let (nc, nf) = if restrict {
            (to.sizes()[dim], from.sizes()[dim])
        } else {
            (from.sizes()[dim], to.sizes()[dim])
        };
        let op = if restrict {
            restrict_line(nc, nf)
        } else {
            prolong_line(nc, nf)
        };
        cur = apply_along(&cur, &sizes, dim, &op);
        sizes[dim] = to.sizes()[dim];
    }
    cur
}

/// Restricts a fine grid field to the factor-2 coarser grid.
pub fn restrict_field(fine: &[f64], fine_spec: &GridSpec) -> Result<Vec<f64>> {
    let coarse = fine_spec.coarsen();
    check_pair(fine_spec, &coarse)?;
    if fine.len() != fine_spec.n_points() {
        return Err(Error::Shape("field length does not match the grid".into()));
    }
    Ok(transfer(fine, fine_spec, &coarse, true))
}

fn blockwise(
    v: &[f64],
    from: &GridSpec,
    to: &GridSpec,
    restrict: bool,
) -> Result<Vec<f64>> {
    let (fine, coarse) = if restrict { (from, to) } else { (to, from) };
    check_pair(fine, coarse)?;
    let n_from = from.n_points();
    if n_from == 0 || v.len() % n_from != 0 {
        return Err(Error::Shape("vector is not a stack of grid fields".into()));
    }
    let mut out = Vec::with_capacity(v.len() / n_from * to.n_points());
    for block in v.chunks(n_from) {
        out.extend(transfer(block, from, to, restrict));
    }
    Ok(out)
}

/// Multilinear interpolation of a stacked coarse vector onto the fine grid.
pub fn prolong_vec(coarse: &[f64], coarse_spec: &GridSpec, fine_spec: &GridSpec) -> Result<Vec<f64>> {
    blockwise(coarse, coarse_spec, fine_spec, false)
}

/// Full-weighting restriction of a stacked fine vector.
pub fn restrict_vec(fine: &[f64], fine_spec: &GridSpec, coarse_spec: &GridSpec) -> Result<Vec<f64>> {
    blockwise(fine, fine_spec, coarse_spec, true)
}

/// Coarse boundary values sampled at the coincident fine boundary points
/// (the last point of a dimension maps to the last fine point).
fn coarsen_boundary(
    fine_maps: &IndexMaps,
    bnd: &[f64],
    fine: &GridSpec,
    coarse: &GridSpec,
) -> Vec<f64> {
    let coarse_b = crate::grid::boundary_set(coarse);
    coarse_b
        .iter()
        .map(|&p| {
            let mut idx = coarse.unflatten(p);
            for d in 0..coarse.n_dims() {
                idx.0[d] = if idx.0[d] + 1 == coarse.sizes()[d] {
                    fine.sizes()[d] - 1
                } else {
                    2 * idx.0[d]
                };
            }
            let fp = fine.flat(&idx);
            let row = fine_maps
                .bnd_row(fp)
                .expect("coarse boundary maps onto fine boundary");
            bnd[row - fine_maps.n_points()]
        })
        .collect()
}

fn coarsen_fields(
    fields: &FieldSet,
    maps: &IndexMaps,
    fine: &GridSpec,
    coarse: &GridSpec,
) -> FieldSet {
    FieldSet {
        coeff: fields
            .coeff
            .iter()
            .map(|c| transfer(c, fine, coarse, true))
            .collect(),
        rhs: transfer(&fields.rhs, fine, coarse, true),
        bnd: coarsen_boundary(maps, &fields.bnd, fine, coarse),
    }
}

/// Inverses of the per-point diagonal blocks of a normal matrix.
#[derive(Clone, Debug)]
struct BlockInverses {
    n_points: usize,
    n_m: usize,
    inv: Vec<f64>,
}

impl BlockInverses {
    fn new(normal: &CsrMatrix, n_points: usize, n_m: usize) -> Result<Self> {
        let mut inv = Vec::with_capacity(n_points * n_m * n_m);
        for p in 0..n_points {
            let block = DMatrix::from_fn(n_m, n_m, |a, b| normal.get(a * n_points + p, b * n_points + p));
            let chol = block.cholesky().ok_or(Error::ZeroDiagonal { row: p })?;
            let bi = chol.inverse();
            for a in 0..n_m {
                for b in 0..n_m {
                    inv.push(bi[(a, b)]);
                }
            }
        }
        Ok(Self { n_points, n_m, inv })
    }

    fn sweep(&self, normal: &CsrMatrix, x: &mut [f64], b: &[f64], sweeps: usize) {
        let (np, nm) = (self.n_points, self.n_m);
        let mut r = vec![0.0; nm];
        for _ in 0..sweeps {
            for p in 0..np {
                for (a, ra) in r.iter_mut().enumerate() {
                    let i = a * np + p;
                    let (cols, vals) = normal.row(i);
                    let mut s = b[i];
                    for (&c, &v) in cols.iter().zip(vals) {
                        s -= v * x[c];
                    }
                    *ra = s;
                }
                let blk = &self.inv[p * nm * nm..(p + 1) * nm * nm];
                for a in 0..nm {
                    let row = &blk[a * nm..(a + 1) * nm];
                    x[a * np + p] += row.iter().zip(&r).map(|(u, v)| u * v).sum::<f64>();
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Level {
    spec: GridSpec,
    normal: CsrMatrix,
    diag: Vec<usize>,
    blocks: Option<BlockInverses>,
}

impl Level {
    fn new(spec: GridSpec, normal: CsrMatrix, n_m: usize, smoother: Smoother) -> Result<Self> {
        let diag = normal.diagonal_positions()?;
        let blocks = match smoother {
            Smoother::PointBlock => Some(BlockInverses::new(&normal, spec.n_points(), n_m)?),
            Smoother::Pointwise => None,
        };
        Ok(Self {
            spec,
            normal,
            diag,
            blocks,
        })
    }

    fn relax(&self, x: &mut [f64], b: &[f64], sweeps: usize) -> Result<()> {
        match &self.blocks {
            Some(bl) => {
                bl.sweep(&self.normal, x, b, sweeps);
                Ok(())
            }
            None => gauss_seidel_with_diag(&self.normal, &self.diag, x, b, sweeps),
        }
    }
}

/// Levels from fine (index 0) to coarse, with a direct factorization of the coarsest.
#[derive(Clone, Debug)]
pub struct GridHierarchy {
    levels: Vec<Level>,
    coarsest: SkylineCholesky,
    config: MultigridConfig,
}

fn level_count(spec: &GridSpec, coarsest: usize) -> Result<usize> {
    for (dim, &s) in spec.sizes().iter().enumerate() {
        if !s.is_power_of_two() || s < coarsest {
            return Err(Error::NotPowerOfTwo {
                dim,
                size: s,
                min: coarsest,
            });
        }
    }
    if !coarsest.is_power_of_two() {
        return Err(Error::Config(format!("coarsest size {coarsest} is not a power of two")));
    }
    let min = *spec.sizes().iter().min().expect("non-empty grid");
    Ok((min.trailing_zeros() - coarsest.trailing_zeros()) as usize + 1)
}

/// Assembles the fine system and builds the full hierarchy.
pub fn build_hierarchy(
    spec: &GridSpec,
    mset: &MultiIndexSet,
    fields: &FieldSet,
    weights: Weights,
    config: MultigridConfig,
) -> Result<GridHierarchy> {
    let sys = assemble(spec, mset, fields, weights)?;
    GridHierarchy::from_system(&sys, config)
}

impl GridHierarchy {
    /// Builds the hierarchy reusing an already assembled fine system.
    pub fn from_system(sys: &LinearSystem, config: MultigridConfig) -> Result<Self> {
        Self::from_normal(sys, sys.a.ata()?, config)
    }

    /// As [`from_system`](Self::from_system) with the fine normal matrix supplied.
    pub fn from_normal(
        sys: &LinearSystem,
        normal: CsrMatrix,
        config: MultigridConfig,
    ) -> Result<Self> {
        let n_g = level_count(sys.spec(), config.coarsest)?;
        let n_m = sys.mset.len();
        let mut levels = Vec::with_capacity(n_g);
        levels.push(Level::new(sys.spec().clone(), normal, n_m, config.smoother)?);
        let mut spec = sys.spec().clone();
        let mut maps = sys.maps.clone();
        let mut cur = sys.fields.clone();
        for _ in 1..n_g {
            let coarse = spec.coarsen();
            let next = coarsen_fields(&cur, &maps, &spec, &coarse);
            let csys = assemble(&coarse, &sys.mset, &next, sys.weights)?;
            levels.push(Level::new(coarse.clone(), csys.a.ata()?, n_m, config.smoother)?);
            maps = csys.maps;
            spec = coarse;
            cur = next;
        }
        let coarsest = SkylineCholesky::factor(&levels.last().expect("one level").normal)?;
        Ok(Self {
            levels,
            coarsest,
            config,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_spec(&self, level: usize) -> &GridSpec {
        &self.levels[level].spec
    }

    pub fn normal(&self, level: usize) -> &CsrMatrix {
        &self.levels[level].normal
    }

    pub fn config(&self) -> MultigridConfig {
        self.config
    }

    pub fn with_config(mut self, config: MultigridConfig) -> Self {
        self.config = config;
        self
    }

    /// One V-cycle on level `level` (0 = finest) improving `x` for `N x = b`.
    pub fn v_cycle(&self, level: usize, x: &mut [f64], b: &[f64], n_pre: usize, n_post: usize) -> Result<()> {
        let lv = &self.levels[level];
        if x.len() != lv.normal.n_rows() || b.len() != x.len() {
            return Err(Error::Shape("v_cycle vector length".into()));
        }
        if level + 1 == self.levels.len() {
            let sol = self.coarsest.solve(b);
            x.copy_from_slice(&sol);
            return Ok(());
        }
        lv.relax(x, b, n_pre)?;
        let nx = lv.normal.spmv(x)?;
        let r: Vec<f64> = b.iter().zip(&nx).map(|(b, a)| b - a).collect();
        let next = &self.levels[level + 1];
        let rc = restrict_vec(&r, &lv.spec, &next.spec)?;
        let mut ec = vec![0.0; rc.len()];
        self.v_cycle(level + 1, &mut ec, &rc, n_pre, n_post)?;
        let e = prolong_vec(&ec, &next.spec, &lv.spec)?;
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        lv.relax(x, b, n_post)
    }

    /// Preconditioner action: `config.cycles` V-cycles from a zero guess.
    pub fn precondition(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; r.len()];
        for _ in 0..self.config.cycles.max(1) {
            self.v_cycle(0, &mut x, r, self.config.pre_sweeps, self.config.post_sweeps)?;
        }
        Ok(x)
    }
}
