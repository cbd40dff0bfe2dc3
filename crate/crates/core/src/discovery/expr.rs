//! Parameterized pointwise expressions over input fields.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ExprNode {
    Const(f64),
    Param(usize),
    Input(String),
    /// `Σ_k θ_k · input^k` with `params[k] = θ_k`.
    Poly { input: Box<ExprNode>, params: Vec<usize> },
    /// Every monomial of total degree `<= degree` in `inputs`, each with its
    /// own parameter, in the order of [`monomial_exponents`].
    MultiPoly {
        inputs: Vec<ExprNode>,
        degree: u32,
        params: Vec<usize>,
    },
    /// `input^(θ_exponent + offset)`.
    Power {
        input: Box<ExprNode>,
        exponent: usize,
        offset: f64,
    },
    Product(Vec<ExprNode>),
    Sum(Vec<ExprNode>),
}

/// Named input fields, all of the same length.
pub type Inputs<'a> = BTreeMap<String, &'a [f64]>;

/// Exponent tuples of all monomials in `n` variables with total degree
/// `<= degree`, by increasing degree then lexicographically descending.
pub fn monomial_exponents(n: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut cur = vec![0; n];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        fill(out, cur, pos + 1, left - k);
    }
    cur[pos] = 0;
}

fn powi(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl ExprNode {
    /// Pointwise value over `n` grid points.
    pub fn eval(&self, inputs: &Inputs, params: &[f64], n: usize) -> Result<Vec<f64>> {
        Ok(match self {
            ExprNode::Const(c) => vec![*c; n],
            ExprNode::Param(id) => vec![params[*id]; n],
            ExprNode::Input(name) => {
                let f = inputs
                    .get(name)
                    .ok_or_else(|| Error::Template(format!("unknown input field {name:?}")))?;
                if f.len() != n {
                    return Err(Error::Shape(format!("input {name:?} has {} points, expected {n}", f.len())));
                }
                f.to_vec()
            }
            ExprNode::Poly { input, params: ids } => {
                let x = input.eval(inputs, params, n)?;
                x.iter()
                    .map(|&x| ids.iter().rev().fold(0.0, |acc, &id| acc * x + params[id]))
                    .collect()
            }
            ExprNode::MultiPoly {
                inputs: ins,
                degree,
                params: ids,
            } => {
                let xs = ins
                    .iter()
                    .map(|e| e.eval(inputs, params, n))
                    .collect::<Result<Vec<_>>>()?;
                let exps = monomial_exponents(ins.len(), *degree);
                (0..n)
                    .map(|p| {
                        exps.iter()
                            .zip(ids)
                            .map(|(e, &id)| {
                                params[id] * e.iter().zip(&xs).map(|(&k, x)| powi(x[p], k)).product::<f64>()
                            })
                            .sum()
                    })
                    .collect()
            }
            ExprNode::Power {
                input,
                exponent,
                offset,
            } => {
                let x = input.eval(inputs, params, n)?;
                check_positive(&x)?;
                let e = params[*exponent] + offset;
                x.iter().map(|&x| x.powf(e)).collect()
            }
            ExprNode::Product(children) => {
                let mut out = vec![1.0; n];
                for c in children {
                    for (o, v) in out.iter_mut().zip(c.eval(inputs, params, n)?) {
                        *o *= v;
                    }
                }
                out
            }
            ExprNode::Sum(children) => {
                let mut out = vec![0.0; n];
                for c in children {
                    for (o, v) in out.iter_mut().zip(c.eval(inputs, params, n)?) {
                        *o += v;
                    }
                }
                out
            }
        })
    }

    /// Reverse pass: given `∂l/∂value` per point, accumulates `∂l/∂params`
    /// and `∂l/∂input` for every referenced input field.
    pub fn backward(
        &self,
        inputs: &Inputs,
        params: &[f64],
        upstream: &[f64],
        grad_params: &mut [f64],
        grad_inputs: &mut BTreeMap<String, Vec<f64>>,
    ) -> Result<()> {
        let n = upstream.len();
        match self {
            ExprNode::Const(_) => {}
            ExprNode::Param(id) => grad_params[*id] += upstream.iter().sum::<f64>(),
            ExprNode::Input(name) => {
                let g = grad_inputs.entry(name.clone()).or_insert_with(|| vec![0.0; n]);
                for (gi, u) in g.iter_mut().zip(upstream) {
                    *gi += u;
                }
            }
            ExprNode::Poly { input, params: ids } => {
                let x = input.eval(inputs, params, n)?;
                let mut down = vec![0.0; n];
                for p in 0..n {
                    let mut xk = 1.0;
                    let mut dx = 0.0;
                    for (k, &id) in ids.iter().enumerate() {
                        grad_params[id] += upstream[p] * xk;
                        if k + 1 < ids.len() {
                            dx += (k + 1) as f64 * params[ids[k + 1]] * xk;
                        }
                        xk *= x[p];
                    }
                    down[p] = upstream[p] * dx;
                }
                input.backward(inputs, params, &down, grad_params, grad_inputs)?;
            }
            ExprNode::MultiPoly {
                inputs: ins,
                degree,
                params: ids,
            } => {
                let xs = ins
                    .iter()
                    .map(|e| e.eval(inputs, params, n))
                    .collect::<Result<Vec<_>>>()?;
                let exps = monomial_exponents(ins.len(), *degree);
                let mut downs = vec![vec![0.0; n]; ins.len()];
                for p in 0..n {
                    for (e, &id) in exps.iter().zip(ids) {
                        let mono: f64 = e.iter().zip(&xs).map(|(&k, x)| powi(x[p], k)).product();
                        grad_params[id] += upstream[p] * mono;
                        for (j, &kj) in e.iter().enumerate() {
                            if kj == 0 {
                                continue;
                            }
                            let d: f64 = e
                                .iter()
                                .zip(&xs)
                                .enumerate()
                                .map(|(i, (&k, x))| if i == j { kj as f64 * powi(x[p], k - 1) } else { powi(x[p], k) })
                                .product();
                            downs[j][p] += upstream[p] * params[id] * d;
                        }
                    }
                }
                for (e, d) in ins.iter().zip(&downs) {
                    e.backward(inputs, params, d, grad_params, grad_inputs)?;
                }
            }
            ExprNode::Power {
                input,
                exponent,
                offset,
            } => {
                let x = input.eval(inputs, params, n)?;
                check_positive(&x)?;
                let e = params[*exponent] + offset;
                let mut down = vec![0.0; n];
                for p in 0..n {
                    let v = x[p].powf(e);
                    grad_params[*exponent] += upstream[p] * v * x[p].ln();
                    down[p] = upstream[p] * e * x[p].powf(e - 1.0);
                }
                input.backward(inputs, params, &down, grad_params, grad_inputs)?;
            }
            ExprNode::Product(children) => {
                let vals = children
                    .iter()
                    .map(|c| c.eval(inputs, params, n))
                    .collect::<Result<Vec<_>>>()?;
                for (i, c) in children.iter().enumerate() {
                    let down: Vec<f64> = (0..n)
                        .map(|p| {
                            upstream[p]
                                * vals
                                    .iter()
                                    .enumerate()
                                    .filter(|&(j, _)| j != i)
                                    .map(|(_, v)| v[p])
                                    .product::<f64>()
                        })
                        .collect();
                    c.backward(inputs, params, &down, grad_params, grad_inputs)?;
                }
            }
            ExprNode::Sum(children) => {
                for c in children {
                    c.backward(inputs, params, upstream, grad_params, grad_inputs)?;
                }
            }
        }
        Ok(())
    }

    /// Symbolic expansion into monomials of the input fields, evaluated at
    /// `params`. `None` when a power's base is not a single monomial.
    pub fn expand(&self, params: &[f64]) -> Option<Polynomial> {
        Some(match self {
            ExprNode::Const(c) => Polynomial::constant(*c),
            ExprNode::Param(id) => Polynomial::constant(params[*id]),
            ExprNode::Input(name) => Polynomial::variable(name),
            ExprNode::Poly { input, params: ids } => {
                let x = input.expand(params)?;
                let mut out = Polynomial::default();
                let mut xk = Polynomial::constant(1.0);
                for &id in ids {
                    out = out.add(&xk.scale(params[id]));
                    xk = xk.mul(&x);
                }
                out
            }
            ExprNode::MultiPoly {
                inputs: ins,
                degree,
                params: ids,
            } => {
                let xs = ins.iter().map(|e| e.expand(params)).collect::<Option<Vec<_>>>()?;
                let mut out = Polynomial::default();
                for (e, &id) in monomial_exponents(ins.len(), *degree).iter().zip(ids) {
                    let mut term = Polynomial::constant(params[id]);
                    for (&k, x) in e.iter().zip(&xs) {
                        for _ in 0..k {
                            term = term.mul(x);
                        }
                    }
                    out = out.add(&term);
                }
                out
            }
            ExprNode::Power {
                input,
                exponent,
                offset,
            } => input.expand(params)?.pow(params[*exponent] + offset)?,
            ExprNode::Product(children) => {
                let mut out = Polynomial::constant(1.0);
                for c in children {
                    out = out.mul(&c.expand(params)?);
                }
                out
            }
            ExprNode::Sum(children) => {
                let mut out = Polynomial::default();
                for c in children {
                    out = out.add(&c.expand(params)?);
                }
                out
            }
        })
    }

    /// Ids of every parameter referenced in the tree.
    pub fn param_ids(&self, out: &mut Vec<usize>) {
        match self {
            ExprNode::Const(_) | ExprNode::Input(_) => {}
            ExprNode::Param(id) => out.push(*id),
            ExprNode::Poly { input, params } => {
                out.extend(params);
                input.param_ids(out);
            }
            ExprNode::MultiPoly { inputs, params, .. } => {
                out.extend(params);
                inputs.iter().for_each(|e| e.param_ids(out));
            }
            ExprNode::Power { input, exponent, .. } => {
                out.push(*exponent);
                input.param_ids(out);
            }
            ExprNode::Product(c) | ExprNode::Sum(c) => c.iter().for_each(|e| e.param_ids(out)),
        }
    }
}

fn check_positive(x: &[f64]) -> Result<()> {
    match x.iter().position(|&v| !(v > 0.0)) {
        Some(index) => Err(Error::Domain { value: x[index], index }),
        None => Ok(()),
    }
}

/// Product of named variables with real exponents, sorted by name.
#[derive(Clone, Debug, PartialEq, PartialOrd, Default)]
pub struct Monomial(pub Vec<(String, f64)>);

impl Eq for Monomial {}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let key = |m: &Monomial| -> Vec<(String, u64)> { m.0.iter().map(|(n, e)| (n.clone(), e.to_bits())).collect() };
        key(self).cmp(&key(other))
    }
}

impl Monomial {
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut map: BTreeMap<String, f64> = BTreeMap::new();
        for (n, e) in self.0.iter().chain(&other.0) {
            *map.entry(n.clone()).or_insert(0.0) += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| *e != 0.0).collect())
    }

    /// Canonical label such as `u^2*v` or `u*u_x`: plain variables first,
    /// then derivative variables, each group by name.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        let mut factors: Vec<&(String, f64)> = self.0.iter().collect();
        factors.sort_by(|a, b| (a.0.contains('_'), &a.0).cmp(&(b.0.contains('_'), &b.0)));
        factors
            .iter()
            .map(|(n, e)| {
                if *e == 1.0 {
                    n.clone()
                } else if e.fract() == 0.0 {
                    format!("{n}^{}", *e as i64)
                } else {
                    format!("{n}^{e:.4}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial(pub BTreeMap<Monomial, f64>);

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        let mut m = BTreeMap::new();
        if c != 0.0 {
            m.insert(Monomial::default(), c);
        }
        Polynomial(m)
    }

    pub fn variable(name: &str) -> Self {
        let mut m = BTreeMap::new();
        m.insert(Monomial(vec![(name.to_string(), 1.0)]), 1.0);
        Polynomial(m)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.0.clone();
        for (k, v) in &other.0 {
            *out.entry(k.clone()).or_insert(0.0) += v;
        }
        out.retain(|_, v| *v != 0.0);
        Polynomial(out)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial(
            self.0
                .iter()
                .map(|(k, v)| (k.clone(), v * s))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::default();
        for (ka, va) in &self.0 {
            for (kb, vb) in &other.0 {
                let mut single = BTreeMap::new();
                single.insert(ka.mul(kb), va * vb);
                out = out.add(&Polynomial(single));
            }
        }
        out
    }

    /// Real power of a single monomial with unit coefficient.
    pub fn pow(&self, e: f64) -> Option<Polynomial> {
        if self.0.len() != 1 {
            return None;
        }
        let (m, c) = self.0.iter().next()?;
        if *c != 1.0 {
            return None;
        }
        let mono = Monomial(m.0.iter().map(|(n, k)| (n.clone(), k * e)).filter(|(_, k)| *k != 0.0).collect());
        let mut out = BTreeMap::new();
        out.insert(mono, 1.0);
        Some(Polynomial(out))
    }
}
