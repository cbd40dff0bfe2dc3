//! Constant-coefficient linear problems described in configuration files.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::FieldSet;
use crate::error::{Error, Result};
use crate::grid::{boundary_set, dim_labels, GridSpec, MultiIndex, MultiIndexSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Constant(f64),
    /// `Π_d sin(kπ x_d / L_d)` over the other spatial axes on one face of
    /// axis `dim` (the high face unless `low`), zero on the rest.
    SineEdge {
        dim: usize,
        #[serde(default)]
        low: bool,
        #[serde(default = "one")]
        k: f64,
    },
    /// `Π_d sin(kπ x_d / L_d)` over all spatial axes on every boundary point.
    Sine {
        #[serde(default = "one")]
        k: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Constant(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub sizes: Vec<usize>,
    /// Grid steps; the unit box `1 / (n − 1)` when absent.
    #[serde(default)]
    pub steps: Option<Vec<f64>>,
    /// Treat axis 0 as time.
    #[serde(default)]
    pub time: bool,
    pub derivatives: Vec<String>,
    /// Constant coefficient per derivative label; omitted labels get zero.
    pub coefficients: BTreeMap<String, f64>,
    #[serde(default)]
    pub rhs: f64,
    #[serde(default)]
    pub boundary: BoundarySpec,
}

#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub spec: GridSpec,
    pub mset: MultiIndexSet,
    pub fields: FieldSet,
}

impl ProblemSpec {
    /// `u_xx + u_yy = 0` on the unit square with `sin(πy)` on the face `x = 1`.
    pub fn laplace(n: usize) -> Self {
        Self {
            sizes: vec![n, n],
            steps: None,
            time: false,
            derivatives: ["x", "xx", "y", "yy"].map(String::from).to_vec(),
            coefficients: [("xx".to_string(), 1.0), ("yy".to_string(), 1.0)].into(),
            rhs: 0.0,
            boundary: BoundarySpec::SineEdge { dim: 0, low: false, k: 1.0 },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn build(&self) -> Result<LinearProblem> {
        let steps = match &self.steps {
            Some(s) => s.clone(),
            None => self
                .sizes
                .iter()
                .map(|&n| 1.0 / (n.max(2) - 1) as f64)
                .collect(),
        };
        let spec = GridSpec::new(self.sizes.clone(), steps, self.time)?;
        let d = spec.n_dims();
        let mset = MultiIndexSet::parse(d, self.time, &self.derivatives)?;
        let labels = dim_labels(self.time);
        let mut coeff = vec![0.0; mset.len()];
        for (label, &c) in &self.coefficients {
            let m = MultiIndex::parse(label, d, &labels)?;
            let pos = mset
                .position(&m)
                .ok_or_else(|| Error::Config(format!("coefficient `{label}` is not in `derivatives`")))?;
            coeff[pos] = c;
        }
        let bs = boundary_set(&spec);
        let mut fields = FieldSet::constant(&coeff, self.rhs, 0.0, spec.n_points(), bs.len());
        let first_space = usize::from(self.time);
        let len = |k: usize| (spec.sizes()[k] - 1).max(1) as f64;
        for (b, &p) in fields.bnd.iter_mut().zip(&bs) {
            let idx = spec.unflatten(p).0;
            *b = match self.boundary {
                BoundarySpec::Constant(c) => c,
                BoundarySpec::SineEdge { dim, low, k } => {
                    if dim >= d {
                        return Err(Error::Config(format!("sine_edge dim {dim} out of range")));
                    }
                    let face = if low { 0 } else { spec.sizes()[dim] - 1 };
                    if idx[dim] != face {
                        0.0
                    } else {
                        (first_space..d)
                            .filter(|&a| a != dim)
                            .map(|a| (k * PI * idx[a] as f64 / len(a)).sin())
                            .product()
                    }
                }
                BoundarySpec::Sine { k } => (first_space..d)
                    .map(|a| (k * PI * idx[a] as f64 / len(a)).sin())
                    .product(),
            };
        }
        Ok(LinearProblem { spec, mset, fields })
    }
}
