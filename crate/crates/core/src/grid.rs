//! Cartesian space-time grids, multi-indices and the flat index maps that
//! lay out solver variables and constraint rows.
//!
//! Dimension 0 is time when [`GridSpec::time`] is set; every flat ordering is
//! lexicographic with dimension 0 slowest.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported number of grid dimensions (time plus three space axes).
pub const MAX_DIMS: usize = 4;

/// Default per-dimension derivative order cap.
pub const DEFAULT_MAX_ORDER: u8 = 2;

const TIME_LABELS: [&str; MAX_DIMS] = ["t", "x", "y", "z"];
const SPACE_LABELS: [&str; MAX_DIMS] = ["x", "y", "z", "w"];

/// Axis labels used to spell multi-indices (`"t"`, `"xx"`, `"tx"`, ...).
pub fn dim_labels(time: bool) -> [&'static str; MAX_DIMS] {
    if time {
        TIME_LABELS
    } else {
        SPACE_LABELS
    }
}

/// Per-dimension derivative orders identifying a partial derivative `u_m`.
/// The all-zero index is `u` itself.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    n_dims: u8,
    orders: [u8; MAX_DIMS],
}

impl MultiIndex {
    pub fn phi(n_dims: usize) -> Self {
        assert!(n_dims >= 1 && n_dims <= MAX_DIMS, "n_dims out of range");
        Self {
            n_dims: n_dims as u8,
            orders: [0; MAX_DIMS],
        }
    }

    /// Pure derivative of `order` along `dim`.
    pub fn pure(n_dims: usize, dim: usize, order: u8) -> Self {
        assert!(dim < n_dims, "dimension out of range");
        let mut m = Self::phi(n_dims);
        m.orders[dim] = order;
        m
    }

    pub fn from_orders(orders: &[u8]) -> Result<Self> {
        if orders.is_empty() || orders.len() > MAX_DIMS {
            return Err(Error::InvalidMultiIndex(format!(
                "expected 1..={MAX_DIMS} orders, got {}",
                orders.len()
            )));
        }
        let mut m = Self::phi(orders.len());
        m.orders[..orders.len()].copy_from_slice(orders);
        Ok(m)
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims as usize
    }

    pub fn orders(&self) -> &[u8] {
        &self.orders[..self.n_dims as usize]
    }

    pub fn order(&self, dim: usize) -> u8 {
        self.orders[dim]
    }

    pub fn total_order(&self) -> u32 {
        self.orders().iter().map(|&o| o as u32).sum()
    }

    pub fn is_phi(&self) -> bool {
        self.orders.iter().all(|&o| o == 0)
    }

    /// `Some((dim, order))` when exactly one dimension carries a derivative.
    pub fn as_pure(&self) -> Option<(usize, u8)> {
        let mut found = None;
        for (d, &o) in self.orders().iter().enumerate() {
            if o > 0 {
                if found.is_some() {
                    return None;
                }
                found = Some((d, o));
            }
        }
        found
    }

    /// Splits off the last differentiated dimension: `tx -> (t, dim 1, order 1)`.
    /// Returns `None` for `φ`.
    pub fn split_last(&self) -> Option<(MultiIndex, usize, u8)> {
        let dim = (0..self.n_dims()).rev().find(|&d| self.orders[d] > 0)?;
        let mut parent = *self;
        let order = parent.orders[dim];
        parent.orders[dim] = 0;
        Some((parent, dim, order))
    }

    /// Spells the index with the given axis labels; `φ` is spelled `"u"`.
    pub fn label(&self, labels: &[&str]) -> String {
        if self.is_phi() {
            return "u".to_string();
        }
        let mut s = String::new();
        for (d, &o) in self.orders().iter().enumerate() {
            for _ in 0..o {
                s.push_str(labels[d]);
            }
        }
        s
    }

    /// Parses `"u"`/`"phi"` or a run of axis labels such as `"xx"` or `"tx"`.
    pub fn parse(s: &str, n_dims: usize, labels: &[&str]) -> Result<Self> {
        let s = s.trim();
        let mut m = Self::phi(n_dims);
        if s == "u" || s == "phi" || s.is_empty() {
            return Ok(m);
        }
        let s = s.strip_prefix("u_").unwrap_or(s);
        for ch in s.chars() {
            let mut buf = [0u8; 4];
            let c = ch.encode_utf8(&mut buf) as &str;
            let dim = labels[..n_dims]
                .iter()
                .position(|l| *l == c)
                .ok_or_else(|| {
                    Error::InvalidMultiIndex(format!("unknown axis `{c}` in `{s}`"))
                })?;
            m.orders[dim] += 1;
        }
        Ok(m)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiIndex{:?}", self.orders())
    }
}

/// Ordered set of multi-indices; `φ` is always present at position 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexSet {
    n_dims: usize,
    items: Vec<MultiIndex>,
    max_order: u8,
}

impl MultiIndexSet {
    pub fn new<I: IntoIterator<Item = MultiIndex>>(n_dims: usize, items: I) -> Result<Self> {
        Self::with_max_order(n_dims, items, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order<I: IntoIterator<Item = MultiIndex>>(
        n_dims: usize,
        items: I,
        max_order: u8,
    ) -> Result<Self> {
        let mut all = vec![MultiIndex::phi(n_dims)];
        for m in items {
            if m.n_dims() != n_dims {
                return Err(Error::InvalidMultiIndex(format!(
                    "{m:?} has {} dims, expected {n_dims}",
                    m.n_dims()
                )));
            }
            if let Some(o) = m.orders().iter().find(|&&o| o > max_order) {
                return Err(Error::InvalidMultiIndex(format!(
                    "{m:?} has order {o} above the cap {max_order}"
                )));
            }
            all.push(m);
        }
        all.sort_by(|a, b| {
            a.total_order()
                .cmp(&b.total_order())
                .then_with(|| b.orders().cmp(a.orders()))
        });
        all.dedup();
        Ok(Self {
            n_dims,
            items: all,
            max_order,
        })
    }

    /// Parses labels such as `["t", "x", "xx"]`.
    pub fn parse<S: AsRef<str>>(n_dims: usize, time: bool, labels: &[S]) -> Result<Self> {
        let axes = dim_labels(time);
        let items = labels
            .iter()
            .map(|s| MultiIndex::parse(s.as_ref(), n_dims, &axes))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_dims, items)
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn max_order(&self) -> u8 {
        self.max_order
    }

    pub fn get(&self, pos: usize) -> MultiIndex {
        self.items[pos]
    }

    pub fn iter(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        self.items.iter().copied()
    }

    pub fn position(&self, m: &MultiIndex) -> Option<usize> {
        self.items.iter().position(|x| x == m)
    }

    pub fn contains(&self, m: &MultiIndex) -> bool {
        self.position(m).is_some()
    }
}

/// A point of the grid, one index per dimension (unused trailing slots are 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex(pub [usize; MAX_DIMS]);

impl GridIndex {
    pub fn new(idx: &[usize]) -> Self {
        let mut a = [0; MAX_DIMS];
        a[..idx.len()].copy_from_slice(idx);
        Self(a)
    }
}

/// Uniform Cartesian grid: point counts and one step per dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    sizes: Vec<usize>,
    steps: Vec<f64>,
    time: bool,
}

impl GridSpec {
    /// `time` marks dimension 0 as the time axis (initial slab boundary only).
    pub fn new(sizes: Vec<usize>, steps: Vec<f64>, time: bool) -> Result<Self> {
        if sizes.is_empty() || sizes.len() > MAX_DIMS {
            return Err(Error::InvalidGrid(format!(
                "expected 1..={MAX_DIMS} dimensions, got {}",
                sizes.len()
            )));
        }
        if sizes.len() != steps.len() {
            return Err(Error::InvalidGrid(format!(
                "{} sizes but {} steps",
                sizes.len(),
                steps.len()
            )));
        }
        if let Some(d) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidGrid(format!("dimension {d} has size 0")));
        }
        if let Some(d) = steps.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "step {} in dimension {d} must be positive and finite",
                steps[d]
            )));
        }
        Ok(Self { sizes, steps, time })
    }

    pub fn n_dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn time(&self) -> bool {
        self.time
    }

    pub fn labels(&self) -> [&'static str; MAX_DIMS] {
        dim_labels(self.time)
    }

    pub fn n_points(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn strides(&self) -> [usize; MAX_DIMS] {
        let mut s = [0; MAX_DIMS];
        let mut acc = 1;
        for d in (0..self.n_dims()).rev() {
            s[d] = acc;
            acc *= self.sizes[d];
        }
        s
    }

    pub fn flat(&self, i: &GridIndex) -> usize {
        let strides = self.strides();
        (0..self.n_dims()).map(|d| i.0[d] * strides[d]).sum()
    }

    pub fn unflatten(&self, mut flat: usize) -> GridIndex {
        let mut idx = [0; MAX_DIMS];
        for d in (0..self.n_dims()).rev() {
            idx[d] = flat % self.sizes[d];
            flat /= self.sizes[d];
        }
        GridIndex(idx)
    }

    /// Every size must hold the 5-point stencil.
    pub fn check_stencil_fit(&self) -> Result<()> {
        match self.sizes.iter().position(|&s| s < 5) {
            Some(d) => Err(Error::InvalidGrid(format!(
                "dimension {d} has {} points; at least 5 are required",
                self.sizes[d]
            ))),
            None => Ok(()),
        }
    }

    /// Halved sizes with doubled steps.
    pub fn coarsen(&self) -> GridSpec {
        GridSpec {
            sizes: self.sizes.iter().map(|&s| s / 2).collect(),
            steps: self.steps.iter().map(|&s| s * 2.0).collect(),
            time: self.time,
        }
    }

    /// Same steps and time flag with other sizes.
    pub fn with_sizes(&self, sizes: Vec<usize>) -> Result<GridSpec> {
        GridSpec::new(sizes, self.steps.clone(), self.time)
    }

    pub fn is_boundary(&self, i: &GridIndex) -> bool {
        (0..self.n_dims()).any(|d| {
            let k = i.0[d];
            if self.time && d == 0 {
                k == 0
            } else {
                k == 0 || k + 1 == self.sizes[d]
            }
        })
    }
}

/// Boundary point set `B` as flat ids in lexicographic order: the `t = 0`
/// slab plus both edges of every spatial dimension.
pub fn boundary_set(spec: &GridSpec) -> Vec<usize> {
    (0..spec.n_points())
        .filter(|&f| spec.is_boundary(&spec.unflatten(f)))
        .collect()
}

/// Shifts `i` by `offset` along `dim`; `None` when the result leaves the grid.
pub fn neighbors(spec: &GridSpec, i: &GridIndex, dim: usize, offset: isize) -> Option<GridIndex> {
    let k = i.0[dim] as isize + offset;
    if k < 0 || k >= spec.sizes[dim] as isize {
        return None;
    }
    let mut out = *i;
    out.0[dim] = k as usize;
    Some(out)
}

/// Taylor smoothness rows along one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothBlock {
    pub dim: usize,
    /// Position of the first pure derivative in `M`.
    pub first: usize,
    /// Position of the second pure derivative, when present (order-2 Taylor).
    pub second: Option<usize>,
    pub forward_start: usize,
    pub backward_start: usize,
    /// Rows per direction: points that have a neighbour on that side.
    pub rows_per_direction: usize,
}

/// Which constraint family a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Equation { point: usize },
    Boundary { point: usize },
    Derivative { m: usize, point: usize },
    SmoothForward { block: usize },
    SmoothBackward { block: usize },
}

/// Flat layout of variables and constraint rows for one grid and derivative set.
///
/// Variables are stacked per multi-index (`z = [u_φ; u_m1; ...]`), so each
/// derivative field is a contiguous slice. Rows are grouped: equation,
/// boundary, derivative, then smoothness (forward/backward per dimension).
#[derive(Clone, Debug, PartialEq)]
pub struct IndexMaps {
    spec: GridSpec,
    n_m: usize,
    boundary: Vec<usize>,
    bnd_lookup: Vec<u32>,
    bnd_start: usize,
    deriv_start: usize,
    smooth: Vec<SmoothBlock>,
    n_c: usize,
}

const NO_ROW: u32 = u32::MAX;

impl IndexMaps {
    pub fn new(spec: &GridSpec, mset: &MultiIndexSet) -> Result<Self> {
        if mset.n_dims() != spec.n_dims() {
            return Err(Error::Shape(format!(
                "multi-index set has {} dims, grid has {}",
                mset.n_dims(),
                spec.n_dims()
            )));
        }
        let labels = spec.labels();
        let n_pts = spec.n_points();
        for m in mset.iter() {
            if m.as_pure().is_none() && !m.is_phi() {
                let (parent, _, _) = m.split_last().expect("non-phi");
                if !mset.contains(&parent) {
                    return Err(Error::MissingDerivative(parent.label(&labels)));
                }
            }
        }
        let boundary = boundary_set(spec);
        let mut bnd_lookup = vec![NO_ROW; n_pts];
        for (k, &p) in boundary.iter().enumerate() {
            bnd_lookup[p] = k as u32;
        }
        let bnd_start = n_pts;
        let deriv_start = bnd_start + boundary.len();
        let mut next = deriv_start + (mset.len() - 1) * n_pts;
        let mut smooth = Vec::new();
        for dim in 0..spec.n_dims() {
            let m1 = MultiIndex::pure(spec.n_dims(), dim, 1);
            let m2 = MultiIndex::pure(spec.n_dims(), dim, 2);
            let (first, second) = match (mset.position(&m1), mset.position(&m2)) {
                (Some(a), b) => (a, b),
                (None, Some(_)) => return Err(Error::MissingDerivative(m1.label(&labels))),
                (None, None) => continue,
            };
            let per = n_pts / spec.sizes()[dim] * (spec.sizes()[dim] - 1);
            smooth.push(SmoothBlock {
                dim,
                first,
                second,
                forward_start: next,
                backward_start: next + per,
                rows_per_direction: per,
            });
            next += 2 * per;
        }
        Ok(Self {
            spec: spec.clone(),
            n_m: mset.len(),
            boundary,
            bnd_lookup,
            bnd_start,
            deriv_start,
            smooth,
            n_c: next,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n_points(&self) -> usize {
        self.spec.n_points()
    }

    pub fn n_m(&self) -> usize {
        self.n_m
    }

    pub fn n_v(&self) -> usize {
        self.n_m * self.n_points()
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn smooth_blocks(&self) -> &[SmoothBlock] {
        &self.smooth
    }

    pub fn var_id(&self, m: usize, point: usize) -> usize {
        m * self.n_points() + point
    }

    /// Inverse of [`var_id`](Self::var_id): `(m position, flat point)`.
    pub fn var_inverse(&self, id: usize) -> (usize, usize) {
        (id / self.n_points(), id % self.n_points())
    }

    pub fn eq_row(&self, point: usize) -> usize {
        point
    }

    pub fn bnd_row(&self, point: usize) -> Option<usize> {
        match self.bnd_lookup[point] {
            NO_ROW => None,
            k => Some(self.bnd_start + k as usize),
        }
    }

    /// Row of the derivative constraint for `M[m]` (`m >= 1`) at `point`.
    pub fn deriv_row(&self, m: usize, point: usize) -> usize {
        debug_assert!(m >= 1);
        self.deriv_start + (m - 1) * self.n_points() + point
    }

    fn compact(&self, idx: &GridIndex, dim: usize) -> usize {
        let mut flat = 0;
        for d in 0..self.spec.n_dims() {
            let size = if d == dim {
                self.spec.sizes()[d] - 1
            } else {
                self.spec.sizes()[d]
            };
            flat = flat * size + idx.0[d];
        }
        flat
    }

    /// Forward Taylor row of smoothness block `b` at `point`, if it has a next point.
    pub fn smooth_forward_row(&self, b: usize, point: usize) -> Option<usize> {
        let blk = &self.smooth[b];
        let idx = self.spec.unflatten(point);
        (idx.0[blk.dim] + 1 < self.spec.sizes()[blk.dim])
            .then(|| blk.forward_start + self.compact(&idx, blk.dim))
    }

    /// Backward Taylor row of smoothness block `b` at `point`, if it has a previous point.
    pub fn smooth_backward_row(&self, b: usize, point: usize) -> Option<usize> {
        let blk = &self.smooth[b];
        let mut idx = self.spec.unflatten(point);
        if idx.0[blk.dim] == 0 {
            return None;
        }
        idx.0[blk.dim] -= 1;
        Some(blk.backward_start + self.compact(&idx, blk.dim))
    }

    pub fn row_kind(&self, row: usize) -> RowKind {
        let n = self.n_points();
        if row < self.bnd_start {
            RowKind::Equation { point: row }
        } else if row < self.deriv_start {
            RowKind::Boundary {
                point: self.boundary[row - self.bnd_start],
            }
        } else if row < self.deriv_start + (self.n_m - 1) * n {
            let k = row - self.deriv_start;
            RowKind::Derivative {
                m: k / n + 1,
                point: k % n,
            }
        } else {
            let b = self
                .smooth
                .iter()
                .position(|blk| row < blk.backward_start + blk.rows_per_direction)
                .expect("row out of range");
            if row < self.smooth[b].backward_start {
                RowKind::SmoothForward { block: b }
            } else {
                RowKind::SmoothBackward { block: b }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn spec(sizes: &[usize], time: bool) -> GridSpec {
        GridSpec::new(sizes.to_vec(), vec![0.1; sizes.len()], time).unwrap()
    }

    #[test]
    fn boundary_4x4_has_ten_points() {
        let s = spec(&[4, 4], true);
        let b = boundary_set(&s);
        // oracle: enumerate the predicate by hand
        let mut expect = BTreeSet::new();
        for t in 0..4 {
            for x in 0..4 {
                if t == 0 || x == 0 || x == 3 {
                    expect.insert(t * 4 + x);
                }
            }
        }
        assert_eq!(b.len(), 10);
        assert_eq!(b, expect.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn single_time_slab_is_all_boundary() {
        let s = spec(&[1, 6], true);
        assert_eq!(boundary_set(&s).len(), 6);
    }

    #[test]
    fn boundary_4x4x4_matches_enumeration() {
        let s = spec(&[4, 4, 4], true);
        let mut count = 0;
        for t in 0..4 {
            for x in 0..4 {
                for y in 0..4 {
                    if t == 0 || x == 0 || x == 3 || y == 0 || y == 3 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, 16 + 3 * 12);
        assert_eq!(boundary_set(&s).len(), count);
    }

    #[test]
    fn steady_grid_uses_all_edges() {
        let s = spec(&[32, 32], false);
        assert_eq!(boundary_set(&s).len(), 124);
    }

    #[test]
    fn neighbor_shifts() {
        let s = spec(&[5, 5], true);
        let i = GridIndex::new(&[2, 3]);
        assert_eq!(neighbors(&s, &i, 1, 1), Some(GridIndex::new(&[2, 4])));
        assert_eq!(neighbors(&s, &GridIndex::new(&[0, 0]), 0, -1), None);
        assert_eq!(neighbors(&s, &i, 1, 2), None);
    }

    #[test]
    fn multi_index_parse_and_label() {
        let labels = dim_labels(true);
        let m = MultiIndex::parse("tx", 2, &labels).unwrap();
        assert_eq!(m.orders(), &[1, 1]);
        assert_eq!(m.label(&labels), "tx");
        assert!(MultiIndex::parse("u", 2, &labels).unwrap().is_phi());
        assert!(MultiIndex::parse("q", 2, &labels).is_err());
        let (parent, dim, order) = m.split_last().unwrap();
        assert_eq!((parent.orders(), dim, order), (&[1u8, 0][..], 1, 1));
        assert_ne!(MultiIndex::phi(2), MultiIndex::pure(2, 0, 1));
    }

    #[test]
    fn order_cap_enforced() {
        let m = MultiIndex::pure(2, 1, 3);
        assert!(MultiIndexSet::new(2, [m]).is_err());
        assert!(MultiIndexSet::with_max_order(2, [m], 3).is_ok());
    }

    #[test]
    fn reference_grid_counts() {
        // 32x32 steady grid with first and second derivatives in both axes
        let s = spec(&[32, 32], false);
        let m = MultiIndexSet::parse(2, false, &["x", "xx", "y", "yy"]).unwrap();
        let maps = IndexMaps::new(&s, &m).unwrap();
        assert_eq!(maps.n_v(), 5120);
        assert_eq!(maps.n_c(), 9212);
    }

    #[test]
    fn mixed_requires_parent() {
        let s = spec(&[6, 6], true);
        let m = MultiIndexSet::parse(2, true, &["x", "tx"]).unwrap();
        assert!(matches!(
            IndexMaps::new(&s, &m),
            Err(Error::MissingDerivative(ref l)) if l == "t"
        ));
    }

    #[test]
    fn second_without_first_is_rejected() {
        let s = spec(&[6, 6], true);
        let m = MultiIndexSet::parse(2, true, &["t", "xx"]).unwrap();
        assert!(matches!(IndexMaps::new(&s, &m), Err(Error::MissingDerivative(_))));
    }

    #[test]
    fn row_maps_are_disjoint_and_cover() {
        let s = spec(&[5, 6, 7], true);
        let m = MultiIndexSet::parse(3, true, &["t", "x", "xx", "y", "yy", "tx"]).unwrap();
        let maps = IndexMaps::new(&s, &m).unwrap();
        let mut seen = vec![false; maps.n_c()];
        let mut mark = |r: usize| {
            assert!(!seen[r], "row {r} assigned twice");
            seen[r] = true;
        };
        for p in 0..maps.n_points() {
            mark(maps.eq_row(p));
            if let Some(r) = maps.bnd_row(p) {
                mark(r);
            }
            for k in 1..maps.n_m() {
                mark(maps.deriv_row(k, p));
            }
            for b in 0..maps.smooth_blocks().len() {
                if let Some(r) = maps.smooth_forward_row(b, p) {
                    mark(r);
                }
                if let Some(r) = maps.smooth_backward_row(b, p) {
                    mark(r);
                }
            }
        }
        assert!(seen.iter().all(|&x| x));
        assert_eq!(maps.n_v(), m.len() * 5 * 6 * 7);
        assert!(maps.n_c() >= maps.n_v());
    }

    #[test]
    fn row_kind_classifies() {
        let s = spec(&[5, 5], true);
        let m = MultiIndexSet::parse(2, true, &["t", "x", "xx"]).unwrap();
        let maps = IndexMaps::new(&s, &m).unwrap();
        assert_eq!(maps.row_kind(3), RowKind::Equation { point: 3 });
        assert_eq!(
            maps.row_kind(maps.bnd_row(0).unwrap()),
            RowKind::Boundary { point: 0 }
        );
        assert_eq!(
            maps.row_kind(maps.deriv_row(2, 7)),
            RowKind::Derivative { m: 2, point: 7 }
        );
        let r = maps.smooth_backward_row(1, 6).unwrap();
        assert_eq!(maps.row_kind(r), RowKind::SmoothBackward { block: 1 });
    }

    proptest::proptest! {
        #[test]
        fn var_id_round_trips(nt in 1usize..7, nx in 1usize..7, id in 0usize..10_000) {
            let s = spec(&[nt, nx], true);
            let m = MultiIndexSet::parse(2, true, &["t", "x"]).unwrap();
            let maps = IndexMaps::new(&s, &m).unwrap();
            let id = id % maps.n_v();
            let (k, p) = maps.var_inverse(id);
            proptest::prop_assert_eq!(maps.var_id(k, p), id);
        }

        #[test]
        fn interior_points_never_boundary(sizes in proptest::collection::vec(3usize..7, 1..4), time: bool) {
            let s = spec(&sizes, time);
            for f in boundary_set(&s) {
                let idx = s.unflatten(f);
                let interior = (0..s.n_dims()).all(|d| idx.0[d] > 0 && idx.0[d] + 1 < sizes[d]);
                proptest::prop_assert!(!interior);
            }
        }

        #[test]
        fn flat_round_trips(sizes in proptest::collection::vec(1usize..6, 1..5), f in 0usize..1000) {
            let s = spec(&sizes, true);
            let f = f % s.n_points();
            proptest::prop_assert_eq!(s.flat(&s.unflatten(f)), f);
        }
    }
}
