//! Minibatch training of a template against a dataset through the
//! differentiable solver.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{fit_loss, sparsity, LossNorm};
use super::metrics::{e_inf, threshold, tpr, Terms};
use super::template::{format_equation, InputSource, PdeTemplate};
use super::transform::{tile, Patch, Transform};
use crate::assembly::{assemble, FieldSet, Weights};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::grid::{boundary_set, GridSpec};
use crate::neurlp::{field_gradients, solve_backward, solve_forward, SolverConfig};
use crate::stencil::{derivative_field, derivative_field_transpose};

/// How an epoch's patches are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchSampling {
    /// The fixed non-overlapping tiling, shuffled.
    #[default]
    Tiles,
    /// As many patches as there are tiles, at uniformly random origins
    /// redrawn every epoch, so every point is sometimes interior.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    /// Step size for transform parameters; defaults to `lr`.
    pub transform_lr: Option<f64>,
    pub sparsity: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Patch extent per dimension; a single value applies to all.
    pub patch: Vec<usize>,
    pub threshold: f64,
    pub loss: LossNorm,
    pub sampling: PatchSampling,
    pub seed: u64,
    pub solver: SolverConfig,
    pub weights: Weights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-5,
            transform_lr: None,
            sparsity: 1e-4,
            epochs: 100,
            batch_size: 8,
            patch: vec![32],
            threshold: 0.02,
            loss: LossNorm::L1,
            sampling: PatchSampling::Tiles,
            seed: 0,
            solver: SolverConfig::default(),
            weights: Weights::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lr > 0.0) || self.transform_lr.is_some_and(|l| !(l > 0.0)) {
            return bad("learning rates must be positive".into());
        }
        if !(self.sparsity >= 0.0) {
            return bad(format!("sparsity weight must be >= 0, got {}", self.sparsity));
        }
        if !(self.threshold >= 0.0) {
            return bad(format!("threshold must be >= 0, got {}", self.threshold));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if self.patch.is_empty() || self.patch.contains(&0) {
            return bad("patch extents must be positive".into());
        }
        self.solver.fgmres.validate()
    }

    fn patch_shape(&self, n_dims: usize) -> Result<Vec<usize>> {
        match self.patch.len() {
            1 => Ok(vec![self.patch[0]; n_dims]),
            n if n == n_dims => Ok(self.patch.clone()),
            n => Err(Error::Config(format!("patch has {n} extents for a {n_dims}-d dataset"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub params: BTreeMap<String, f64>,
    pub thresholded: BTreeMap<String, f64>,
    pub threshold: f64,
    /// Right-hand-side form of the thresholded equation; empty when a real
    /// exponent prevents symbolic expansion.
    pub equation: Terms,
    pub equation_text: String,
    pub truth: Terms,
    pub truth_params: BTreeMap<String, f64>,
    pub tpr: Option<f64>,
    pub e_inf: Option<f64>,
    /// Mean minibatch loss per epoch.
    pub loss_history: Vec<f64>,
    pub epochs: usize,
    pub seed: u64,
}

impl DiscoveryReport {
    /// Relative error of a learned parameter against its ground truth.
    pub fn param_error(&self, name: &str) -> Option<f64> {
        let t = self.truth_params.get(name)?;
        let v = self.params.get(name)?;
        Some((v - t).abs() / t.abs())
    }
}

/// Loss and gradients of one patch.
#[derive(Clone, Debug)]
pub struct PatchGrad {
    pub loss: f64,
    pub params: Vec<f64>,
    /// One gradient per template input; empty for inputs with no learnable
    /// transform.
    pub transforms: Vec<Vec<f64>>,
}

pub struct Trainer<'a> {
    pub template: &'a PdeTemplate,
    pub dataset: &'a Dataset,
    pub cfg: TrainConfig,
    pub params: Vec<f64>,
    /// Transform of every data-backed input (identity for derived ones).
    pub transforms: Vec<Transform>,
    data: Vec<&'a [f64]>,
    sizes: Vec<usize>,
    steps: Vec<f64>,
    pub patches: Vec<Patch>,
    solution: usize,
    sparse: Vec<bool>,
}

impl<'a> Trainer<'a> {
    pub fn new(template: &'a PdeTemplate, dataset: &'a Dataset, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let n_dims = dataset.sizes.len();
        if n_dims != template.mset.n_dims() {
            return Err(Error::Config(format!(
                "template has {} dims, dataset has {n_dims}",
                template.mset.n_dims()
            )));
        }
        let shape = cfg.patch_shape(n_dims)?;
        let patches = tile(&dataset.sizes, &shape);
        if patches.is_empty() {
            return Err(Error::Config(format!(
                "patch {shape:?} does not fit in dataset {:?}",
                dataset.sizes
            )));
        }
        GridSpec::new(shape.clone(), dataset.steps.clone(), true)?.check_stencil_fit()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut data = Vec::new();
        let mut transforms = Vec::new();
        for inp in &template.inputs {
            match &inp.source {
                InputSource::Data { field, transform } => {
                    let f = dataset.field(field)?;
                    transforms.push(Transform::new(*transform, f, n_dims, &mut rng));
                    data.push(f);
                }
                InputSource::Derivative { .. } => {
                    transforms.push(Transform::Identity);
                    data.push(&[][..]);
                }
            }
        }
        let solution = template
            .inputs
            .iter()
            .position(|i| i.name == template.solution)
            .expect("template validated the solution input");
        Ok(Self {
            template,
            dataset,
            params: template.initial_params(),
            sparse: template.params.iter().map(|p| p.sparse).collect(),
            cfg,
            transforms,
            data,
            sizes: dataset.sizes.clone(),
            steps: dataset.steps.clone(),
            patches,
            solution,
        })
    }

    /// Full forward and backward pass on one patch, excluding the sparsity term.
    pub fn patch_grad(&self, patch: &Patch, params: &[f64], transforms: &[Transform]) -> Result<PatchGrad> {
        let tpl = self.template;
        let idx = patch.global_indices(&self.sizes);
        let n = idx.len();
        let spec = GridSpec::new(patch.shape.clone(), self.steps.clone(), true)?;

        let mut values: Vec<Vec<f64>> = Vec::with_capacity(tpl.inputs.len());
        for (k, inp) in tpl.inputs.iter().enumerate() {
            values.push(match inp.source {
                InputSource::Data { .. } => transforms[k].forward(self.data[k], &self.sizes, &idx),
                InputSource::Derivative { of, dim, order } => {
                    derivative_field(&values[of], &patch.shape, &self.steps, dim, order)
                }
            });
        }
        let inputs: BTreeMap<String, &[f64]> = tpl
            .inputs
            .iter()
            .zip(&values)
            .map(|(i, v)| (i.name.clone(), v.as_slice()))
            .collect();

        let bs = boundary_set(&spec);
        let fields = FieldSet {
            coeff: tpl
                .coeff
                .iter()
                .map(|e| e.eval(&inputs, params, n))
                .collect::<Result<_>>()?,
            rhs: tpl.rhs.eval(&inputs, params, n)?,
            bnd: bs.iter().map(|&p| values[self.solution][p]).collect(),
        };
        let sys = assemble(&spec, &tpl.mset, &fields, self.cfg.weights)?;
        let fwd = solve_forward(&sys, &self.cfg.solver)?;
        let u = fwd.field(0);

        let raw = patch.extract(self.data[self.solution], &self.sizes);
        let (l_data, g_data) = fit_loss(self.cfg.loss, u, &raw);
        let (l_cons, g_cons) = fit_loss(self.cfg.loss, u, &values[self.solution]);
        let mut loss = l_data + l_cons;
        let mut grad_inputs: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        grad_inputs.insert(tpl.solution.clone(), g_cons.iter().map(|g| -g).collect());
        for (k, inp) in tpl.inputs.iter().enumerate() {
            if inp.data_loss {
                let InputSource::Data { .. } = inp.source else {
                    return Err(Error::Template(format!("input {:?}: data_loss needs a data field", inp.name)));
                };
                let (l, g) = fit_loss(self.cfg.loss, &values[k], &patch.extract(self.data[k], &self.sizes));
                loss += l;
                let e = grad_inputs.entry(inp.name.clone()).or_insert_with(|| vec![0.0; n]);
                for (a, b) in e.iter_mut().zip(g) {
                    *a += b;
                }
            }
        }

        let mut g_z = vec![0.0; sys.n_v()];
        for p in 0..n {
            g_z[sys.maps.var_id(0, p)] = g_data[p] + g_cons[p];
        }
        let bwd = solve_backward(&sys, &fwd, &g_z)?;
        let fg = field_gradients(&sys, &bwd);

        let mut grad_params = vec![0.0; params.len()];
        for (m, e) in tpl.coeff.iter().enumerate() {
            if m != tpl.time_index {
                e.backward(&inputs, params, &fg.coeff[m], &mut grad_params, &mut grad_inputs)?;
            }
        }
        tpl.rhs.backward(&inputs, params, &fg.rhs, &mut grad_params, &mut grad_inputs)?;
        let gs = grad_inputs
            .entry(tpl.solution.clone())
            .or_insert_with(|| vec![0.0; n]);
        for (&p, g) in bs.iter().zip(&fg.bnd) {
            gs[p] += g;
        }

        let mut grad_transforms = vec![Vec::new(); tpl.inputs.len()];
        for (k, inp) in tpl.inputs.iter().enumerate().rev() {
            let Some(g) = grad_inputs.remove(&inp.name) else {
                continue;
            };
            match inp.source {
                InputSource::Derivative { of, dim, order } => {
                    let back = derivative_field_transpose(&g, &patch.shape, &self.steps, dim, order);
                    let parent = grad_inputs
                        .entry(tpl.inputs[of].name.clone())
                        .or_insert_with(|| vec![0.0; n]);
                    for (a, b) in parent.iter_mut().zip(back) {
                        *a += b;
                    }
                }
                InputSource::Data { .. } => {
                    let t = &transforms[k];
                    if !t.params().is_empty() {
                        let mut gt = vec![0.0; t.params().len()];
                        t.backward(self.data[k], &self.sizes, &idx, &g, &mut gt);
                        grad_transforms[k] = gt;
                    }
                }
            }
        }
        Ok(PatchGrad {
            loss,
            params: grad_params,
            transforms: grad_transforms,
        })
    }

    /// Mean loss and gradient over `batch`, plus the sparsity term.
    pub fn batch_grad(&self, batch: &[usize]) -> Result<PatchGrad> {
        let (params, transforms) = (&self.params, &self.transforms);
        let parts = batch
            .par_iter()
            .map(|&i| self.patch_grad(&self.patches[i], params, transforms))
            .collect::<Vec<_>>();
        let scale = 1.0 / batch.len() as f64;
        let mut total = PatchGrad {
            loss: 0.0,
            params: vec![0.0; params.len()],
            transforms: transforms.iter().map(|t| vec![0.0; t.params().len()]).collect(),
        };
        for part in parts {
            let part = part?;
            total.loss += part.loss * scale;
            for (a, b) in total.params.iter_mut().zip(&part.params) {
                *a += b * scale;
            }
            for (ta, tb) in total.transforms.iter_mut().zip(&part.transforms) {
                for (a, b) in ta.iter_mut().zip(tb) {
                    *a += b * scale;
                }
            }
        }
        let (l_s, g_s) = sparsity(self.cfg.sparsity, params, &self.sparse);
        total.loss += l_s;
        for (a, b) in total.params.iter_mut().zip(g_s) {
            *a += b;
        }
        Ok(total)
    }

    pub fn run(self) -> Result<DiscoveryReport> {
        self.run_with(|_, _, _| {})
    }

    /// Like [`Trainer::run`], calling `progress(epoch, mean_loss, params)`
    /// after every epoch.
    pub fn run_with(mut self, mut progress: impl FnMut(usize, f64, &[f64])) -> Result<DiscoveryReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0x5eed);
        let mut opt = Adam::new(self.params.len(), self.cfg.lr);
        let tlr = self.cfg.transform_lr.unwrap_or(self.cfg.lr);
        let mut topt: Vec<Adam> = self.transforms.iter().map(|t| Adam::new(t.params().len(), tlr)).collect();
        let mut order: Vec<usize> = (0..self.patches.len()).collect();
        let mut history = Vec::with_capacity(self.cfg.epochs);
        let shape = self.patches[0].shape.clone();
        for epoch in 0..self.cfg.epochs {
            if self.cfg.sampling == PatchSampling::Random {
                for p in self.patches.iter_mut() {
                    p.origin = shape
                        .iter()
                        .zip(&self.sizes)
                        .map(|(&s, &n)| rng.gen_range(0..=n - s))
                        .collect();
                }
            }
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            let mut count = 0;
            for (b, batch) in order.chunks(self.cfg.batch_size).enumerate() {
                let g = self.batch_grad(batch).map_err(|e| Error::Training {
                    epoch,
                    batch: b,
                    source: Box::new(e),
                })?;
                opt.step(&mut self.params, &g.params);
                for ((t, o), gt) in self.transforms.iter_mut().zip(&mut topt).zip(&g.transforms) {
                    if !gt.is_empty() {
                        o.step(t.params_mut(), gt);
                    }
                }
                sum += g.loss;
                count += 1;
            }
            history.push(sum / count as f64);
            progress(epoch, sum / count as f64, &self.params);
        }
        Ok(self.report(history))
    }

    pub fn report(&self, loss_history: Vec<f64>) -> DiscoveryReport {
        let tpl = self.template;
        let tau = self.cfg.threshold;
        let cut = threshold(&self.params, tau);
        let thresholded: Vec<f64> = self
            .params
            .iter()
            .zip(&cut)
            .zip(&self.sparse)
            .map(|((&p, &c), &s)| if s { c } else { p })
            .collect();
        let names = |v: &[f64]| -> BTreeMap<String, f64> {
            tpl.params.iter().zip(v).map(|(p, &x)| (p.name.clone(), x)).collect()
        };
        let equation = tpl.equation(&thresholded).unwrap_or_default();
        let lhs = format!("{}_t", tpl.solution);
        let equation_text = if equation.is_empty() && thresholded.iter().any(|&p| p != 0.0) {
            format!(
                "{lhs} = <non-polynomial; see parameters> {}",
                tpl.params
                    .iter()
                    .zip(&thresholded)
                    .map(|(p, v)| format!("{}={v:.4}", p.name))
                    .collect::<Vec<_>>()
                    .join(" ")
            )
        } else {
            format_equation(&lhs, &equation)
        };
        let truth = self.dataset.truth.clone();
        let (tpr_v, e_inf_v) = if truth.is_empty() {
            (None, None)
        } else {
            (tpr(&truth, &equation, tau).ok(), e_inf(&truth, &equation).ok())
        };
        DiscoveryReport {
            params: names(&self.params),
            thresholded: names(&thresholded),
            threshold: tau,
            equation,
            equation_text,
            truth,
            truth_params: self.dataset.truth_params.clone(),
            tpr: tpr_v,
            e_inf: e_inf_v,
            loss_history,
            epochs: self.cfg.epochs,
            seed: self.cfg.seed,
        }
    }
}

/// Trains `template` on `dataset` and returns the thresholded report.
pub fn train(dataset: &Dataset, template: &PdeTemplate, cfg: &TrainConfig) -> Result<DiscoveryReport> {
    Trainer::new(template, dataset, cfg.clone())?.run()
}
