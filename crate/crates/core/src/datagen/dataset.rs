//! Dataset container: a one-line text magic, a JSON header line, then the
//! fields as little-endian `f64` in header order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dim_labels, GridSpec};

pub const MAGIC: &str = "MECHPDE-DATASET";
pub const VERSION: u32 = 1;

/// Named fields sampled on a time-first grid, with the generating equation.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub sizes: Vec<usize>,
    pub steps: Vec<f64>,
    pub fields: Vec<(String, Vec<f64>)>,
    /// Right-hand-side coefficients of the first field's equation,
    /// `u_t = Σ ξ_j term_j`, keyed by canonical term label.
    pub truth: BTreeMap<String, f64>,
    /// Ground-truth values of named template parameters, e.g. an exponent.
    pub truth_params: BTreeMap<String, f64>,
    pub meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    sizes: Vec<usize>,
    steps: Vec<f64>,
    fields: Vec<String>,
    truth: BTreeMap<String, f64>,
    truth_params: BTreeMap<String, f64>,
    meta: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(sizes: Vec<usize>, steps: Vec<f64>) -> Result<Self> {
        GridSpec::new(sizes.clone(), steps.clone(), true)?;
        Ok(Self {
            sizes,
            steps,
            fields: Vec::new(),
            truth: BTreeMap::new(),
            truth_params: BTreeMap::new(),
            meta: BTreeMap::new(),
        })
    }

    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.sizes.clone(), self.steps.clone(), true)
    }

    pub fn n_points(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn push_field(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.n_points() {
            return Err(Error::Shape(format!(
                "field {name:?} has {} values for {} grid points",
                values.len(),
                self.n_points()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Generator(format!("field {name:?} is not finite at {i}")));
        }
        if self.fields.iter().any(|(n, _)| n == name) {
            return Err(Error::Shape(format!("field {name:?} already present")));
        }
        self.fields.push((name.into(), values));
        Ok(())
    }

    pub fn field(&self, name: &str) -> Result<&[f64]> {
        self.fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Shape(format!("dataset has no field {name:?}")))
    }

    pub fn field_mut(&mut self, name: &str) -> Result<&mut Vec<f64>> {
        self.fields
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Shape(format!("dataset has no field {name:?}")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            sizes: self.sizes.clone(),
            steps: self.steps.clone(),
            fields: self.fields.iter().map(|(n, _)| n.clone()).collect(),
            truth: self.truth.clone(),
            truth_params: self.truth_params.clone(),
            meta: self.meta.clone(),
        };
        let mut out = format!("{MAGIC} {VERSION}\n").into_bytes();
        out.extend(serde_json::to_vec(&header).expect("header serializes"));
        out.push(b'\n');
        for (_, v) in &self.fields {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let parse = |offset: usize, message: String| Error::Parse { offset, message };
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse(0, "missing magic line".into()))?;
        let first = std::str::from_utf8(&bytes[..nl]).map_err(|_| parse(0, "magic line is not UTF-8".into()))?;
        let version = first
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| parse(0, format!("expected `{MAGIC}`")))?;
        let version: u32 = version
            .parse()
            .map_err(|_| parse(MAGIC.len() + 1, format!("bad version {version:?}")))?;
        if version != VERSION {
            return Err(Error::Version {
                found: version,
                expected: VERSION,
            });
        }
        let start = nl + 1;
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| start + p)
            .ok_or_else(|| parse(start, "unterminated header".into()))?;
        let header: Header = serde_json::from_slice(&bytes[start..end])
            .map_err(|e| parse(start + e.column().saturating_sub(1), e.to_string()))?;
        if header.fields.is_empty() {
            return Err(parse(start, "dataset has no fields".into()));
        }
        GridSpec::new(header.sizes.clone(), header.steps.clone(), true).map_err(|e| parse(start, e.to_string()))?;
        let n: usize = header.sizes.iter().product();
        let payload = &bytes[end + 1..];
        let want = n * 8 * header.fields.len();
        if payload.len() != want {
            return Err(parse(
                end + 1 + payload.len().min(want),
                format!("payload has {} bytes, expected {want}", payload.len()),
            ));
        }
        let fields = header
            .fields
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let v = payload[k * n * 8..(k + 1) * n * 8]
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .collect();
                (name.clone(), v)
            })
            .collect();
        Ok(Self {
            sizes: header.sizes,
            steps: header.steps,
            fields,
            truth: header.truth,
            truth_params: header.truth_params,
            meta: header.meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// One row per grid point: coordinates then the field value.
    pub fn write_csv<W: Write>(&self, name: &str, mut w: W) -> Result<()> {
        let values = self.field(name)?;
        let labels = dim_labels(true);
        let d = self.sizes.len();
        writeln!(w, "{},{name}", labels[..d].join(","))?;
        let spec = self.spec()?;
        for (p, v) in values.iter().enumerate() {
            let idx = spec.unflatten(p);
            for k in 0..d {
                write!(w, "{},", idx.0[k] as f64 * self.steps[k])?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}
