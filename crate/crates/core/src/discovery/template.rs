//! PDE templates: a structured-text description of the learnable equation
//! `u_t + Σ_m c_m(ũ; θ) u_m = b(ũ; θ)`, compiled into expression trees.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::expr::{monomial_exponents, ExprNode, Polynomial};
use crate::error::{Error, Result};
use crate::grid::{dim_labels, MultiIndex, MultiIndexSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExprSpec {
    Const(f64),
    Param(String),
    Input(String),
    Poly(PolySpec),
    MultiPoly(MultiPolySpec),
    Power(PowerSpec),
    Product(Vec<ExprSpec>),
    Sum(Vec<ExprSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    pub input: String,
    pub degree: u32,
    /// Prefix for the generated parameter names `{name}_{k}`.
    pub name: String,
    #[serde(default = "yes")]
    pub sparse: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiPolySpec {
    pub inputs: Vec<String>,
    pub degree: u32,
    pub name: String,
    #[serde(default = "yes")]
    pub sparse: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSpec {
    pub input: String,
    /// Name of a declared parameter.
    pub exponent: String,
    #[serde(default)]
    pub offset: f64,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    FreeField,
    Mlp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub name: String,
    /// Dataset field feeding this input; exclusive with `of`.
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub transform: Option<TransformKind>,
    /// Derived input: derivative of another input along `derivative`.
    #[serde(default)]
    pub of: Option<String>,
    #[serde(default)]
    pub derivative: Option<String>,
    /// Adds `loss(input, data)` to the objective. Used for auxiliary fields
    /// that have no solved counterpart.
    #[serde(default)]
    pub data_loss: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    #[serde(default)]
    pub init: f64,
    #[serde(default = "yes")]
    pub sparse: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    /// Name of the solved field; also the input that supplies boundary values.
    #[serde(default = "default_solution")]
    pub solution: String,
    /// Number of grid dimensions including time.
    pub dims: usize,
    /// Derivative labels appearing in the equation, `t` included.
    pub derivatives: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamSpec>,
    pub inputs: Vec<InputSpec>,
    pub coefficients: BTreeMap<String, ExprSpec>,
    #[serde(default)]
    pub rhs: Option<ExprSpec>,
}

fn default_solution() -> String {
    "u".into()
}

/// Source of an input field.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    Data { field: String, transform: TransformKind },
    Derivative { of: usize, dim: usize, order: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledInput {
    pub name: String,
    pub source: InputSource,
    pub data_loss: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub init: f64,
    pub sparse: bool,
}

/// Compiled template ready for evaluation.
#[derive(Clone, Debug)]
pub struct PdeTemplate {
    pub solution: String,
    pub mset: MultiIndexSet,
    /// One expression per multi-index; the time derivative holds `Const(1)`.
    pub coeff: Vec<ExprNode>,
    pub rhs: ExprNode,
    pub params: Vec<Param>,
    /// Inputs in dependency order.
    pub inputs: Vec<CompiledInput>,
    pub time_index: usize,
    pub spec: TemplateSpec,
}

struct Compiler<'a> {
    params: Vec<Param>,
    declared: &'a BTreeMap<String, ParamSpec>,
    inputs: &'a [CompiledInput],
}

impl Compiler<'_> {
    fn param(&mut self, name: &str, init: f64, sparse: bool) -> Result<usize> {
        if self.params.iter().any(|p| p.name == name) {
            return Err(Error::Template(format!("parameter {name:?} defined twice")));
        }
        self.params.push(Param {
            name: name.into(),
            init,
            sparse,
        });
        Ok(self.params.len() - 1)
    }

    /// Declared parameters are created on first use and shared afterwards.
    fn declared(&mut self, name: &str) -> Result<usize> {
        if let Some(id) = self.params.iter().position(|p| p.name == name) {
            return Ok(id);
        }
        let spec = self
            .declared
            .get(name)
            .ok_or_else(|| Error::Template(format!("undeclared parameter {name:?}")))?;
        self.param(name, spec.init, spec.sparse)
    }

    fn input(&self, name: &str) -> Result<ExprNode> {
        if self.inputs.iter().any(|i| i.name == name) {
            Ok(ExprNode::Input(name.into()))
        } else {
            Err(Error::Template(format!("unknown input {name:?}")))
        }
    }

    fn compile(&mut self, e: &ExprSpec) -> Result<ExprNode> {
        Ok(match e {
            ExprSpec::Const(c) => ExprNode::Const(*c),
            ExprSpec::Param(name) => ExprNode::Param(self.declared(name)?),
            ExprSpec::Input(name) => self.input(name)?,
            ExprSpec::Poly(p) => {
                let input = Box::new(self.input(&p.input)?);
                let params = (0..=p.degree)
                    .map(|k| self.param(&format!("{}_{k}", p.name), 0.0, p.sparse))
                    .collect::<Result<_>>()?;
                ExprNode::Poly { input, params }
            }
            ExprSpec::MultiPoly(p) => {
                if p.inputs.is_empty() {
                    return Err(Error::Template(format!("multi_poly {:?} has no inputs", p.name)));
                }
                let inputs = p.inputs.iter().map(|n| self.input(n)).collect::<Result<Vec<_>>>()?;
                let n = monomial_exponents(p.inputs.len(), p.degree).len();
                let params = (0..n)
                    .map(|k| self.param(&format!("{}_{k}", p.name), 0.0, p.sparse))
                    .collect::<Result<_>>()?;
                ExprNode::MultiPoly {
                    inputs,
                    degree: p.degree,
                    params,
                }
            }
            ExprSpec::Power(p) => ExprNode::Power {
                input: Box::new(self.input(&p.input)?),
                exponent: self.declared(&p.exponent)?,
                offset: p.offset,
            },
            ExprSpec::Product(c) => ExprNode::Product(c.iter().map(|e| self.compile(e)).collect::<Result<_>>()?),
            ExprSpec::Sum(c) => ExprNode::Sum(c.iter().map(|e| self.compile(e)).collect::<Result<_>>()?),
        })
    }
}

fn compile_inputs(spec: &TemplateSpec, axes: &[&str]) -> Result<Vec<CompiledInput>> {
    let mut out: Vec<CompiledInput> = Vec::new();
    for inp in &spec.inputs {
        if out.iter().any(|o| o.name == inp.name) {
            return Err(Error::Template(format!("input {:?} defined twice", inp.name)));
        }
        let source = match (&inp.field, &inp.of) {
            (Some(field), None) => {
                if inp.derivative.is_some() {
                    return Err(Error::Template(format!("input {:?}: derivative needs `of`", inp.name)));
                }
                InputSource::Data {
                    field: field.clone(),
                    transform: inp.transform.unwrap_or(TransformKind::Identity),
                }
            }
            (None, Some(of)) => {
                let of_id = out
                    .iter()
                    .position(|o| &o.name == of)
                    .ok_or_else(|| Error::Template(format!("input {:?}: {of:?} must be defined earlier", inp.name)))?;
                let label = inp
                    .derivative
                    .as_deref()
                    .ok_or_else(|| Error::Template(format!("input {:?}: `of` needs `derivative`", inp.name)))?;
                let m = MultiIndex::parse(label, spec.dims, axes)?;
                let (parent, dim, order) = m
                    .split_last()
                    .ok_or_else(|| Error::Template(format!("input {:?}: empty derivative", inp.name)))?;
                if !parent.is_phi() {
                    return Err(Error::Template(format!(
                        "input {:?}: only single-axis derivatives are supported",
                        inp.name
                    )));
                }
                if inp.transform.is_some() {
                    return Err(Error::Template(format!("input {:?}: derived inputs take no transform", inp.name)));
                }
                InputSource::Derivative {
                    of: of_id,
                    dim,
                    order: order as usize,
                }
            }
            _ => {
                return Err(Error::Template(format!(
                    "input {:?} needs exactly one of `field` or `of`",
                    inp.name
                )))
            }
        };
        out.push(CompiledInput {
            name: inp.name.clone(),
            source,
            data_loss: inp.data_loss,
        });
    }
    Ok(out)
}

impl PdeTemplate {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: TemplateSpec = toml::from_str(text).map_err(|e| Error::Template(e.to_string()))?;
        Self::compile(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Template(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn compile(spec: TemplateSpec) -> Result<Self> {
        if !(2..=4).contains(&spec.dims) {
            return Err(Error::Template(format!("dims must be 2..=4 (time first), got {}", spec.dims)));
        }
        let axes = dim_labels(true);
        let mset = MultiIndexSet::parse(spec.dims, true, &spec.derivatives)?;
        let t = MultiIndex::pure(spec.dims, 0, 1);
        let time_index = mset
            .position(&t)
            .ok_or_else(|| Error::Template("derivatives must include `t`".into()))?;
        let inputs = compile_inputs(&spec, &axes)?;
        match inputs.iter().find(|i| i.name == spec.solution) {
            Some(CompiledInput {
                source: InputSource::Data { .. },
                ..
            }) => {}
            _ => {
                return Err(Error::Template(format!(
                    "solution {:?} must be a data-backed input",
                    spec.solution
                )))
            }
        }
        for name in spec.coefficients.keys() {
            let m = MultiIndex::parse(name, spec.dims, &axes)?;
            if m == t {
                return Err(Error::Template("the `t` coefficient is fixed to 1 and cannot be set".into()));
            }
            if !mset.contains(&m) {
                return Err(Error::Template(format!("coefficient {name:?} is not in `derivatives`")));
            }
        }
        let mut c = Compiler {
            params: Vec::new(),
            declared: &spec.params,
            inputs: &inputs,
        };
        let mut coeff = Vec::with_capacity(mset.len());
        for (k, m) in mset.iter().enumerate() {
            if k == time_index {
                coeff.push(ExprNode::Const(1.0));
                continue;
            }
            let e = spec
                .coefficients
                .iter()
                .find(|(name, _)| MultiIndex::parse(name, spec.dims, &axes).ok() == Some(m));
            coeff.push(match e {
                Some((_, e)) => c.compile(e)?,
                None => ExprNode::Const(0.0),
            });
        }
        let rhs = match &spec.rhs {
            Some(e) => c.compile(e)?,
            None => ExprNode::Const(0.0),
        };
        let params = c.params;
        for name in spec.params.keys() {
            if !params.iter().any(|p| &p.name == name) {
                return Err(Error::Template(format!("parameter {name:?} is declared but unused")));
            }
        }
        Ok(Self {
            solution: spec.solution.clone(),
            mset,
            coeff,
            rhs,
            params,
            inputs,
            time_index,
            spec,
        })
    }

    pub fn initial_params(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.init).collect()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    /// Label of the solution's derivative `m`, e.g. `u_xx`; `φ` is the
    /// solution name itself.
    pub fn term_label(&self, m: usize) -> String {
        let mi = self.mset.get(m);
        if mi.is_phi() {
            self.solution.clone()
        } else {
            format!("{}_{}", self.solution, mi.label(&dim_labels(true)))
        }
    }

    /// The learned equation in right-hand-side form `u_t = Σ ξ_j term_j`,
    /// keyed by canonical monomial labels. `None` if a power cannot be
    /// expanded symbolically.
    pub fn equation(&self, params: &[f64]) -> Option<BTreeMap<String, f64>> {
        let mut total = Polynomial::default();
        for (m, e) in self.coeff.iter().enumerate() {
            if m == self.time_index {
                continue;
            }
            let term = e.expand(params)?.mul(&Polynomial::variable(&self.term_label(m)));
            total = total.add(&term.scale(-1.0));
        }
        total = total.add(&self.rhs.expand(params)?);
        let mut out = BTreeMap::new();
        for (mono, c) in total.0 {
            *out.entry(mono.label()).or_insert(0.0) += c;
        }
        out.retain(|_, c| *c != 0.0);
        Some(out)
    }
}

/// Human-readable form such as `u_t = -1.0000 u*u_x + 0.1000 u_xx`.
pub fn format_equation(lhs: &str, terms: &BTreeMap<String, f64>) -> String {
    if terms.is_empty() {
        return format!("{lhs} = 0");
    }
    let mut s = format!("{lhs} =");
    for (i, (label, c)) in terms.iter().enumerate() {
        let sign = if *c < 0.0 { "-" } else if i == 0 { "" } else { "+" };
        if i == 0 {
            s.push_str(&format!(" {sign}{:.4} {label}", c.abs()));
        } else {
            s.push_str(&format!(" {sign} {:.4} {label}", c.abs()));
        }
    }
    s
}
