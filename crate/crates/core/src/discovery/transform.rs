//! Learnable maps from raw data to the fields `ũ` that feed the template.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::template::TransformKind;

/// Rectangular window of a dataset grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub origin: Vec<usize>,
    pub shape: Vec<usize>,
}

impl Patch {
    pub fn n_points(&self) -> usize {
        self.shape.iter().product()
    }

    /// Global flat index of every patch point, row-major.
    pub fn global_indices(&self, sizes: &[usize]) -> Vec<usize> {
        let n = self.n_points();
        let d = self.shape.len();
        let mut out = Vec::with_capacity(n);
        let mut local = vec![0usize; d];
        for _ in 0..n {
            let mut g = 0;
            for k in 0..d {
                g = g * sizes[k] + self.origin[k] + local[k];
            }
            out.push(g);
            for k in (0..d).rev() {
                local[k] += 1;
                if local[k] < self.shape[k] {
                    break;
                }
                local[k] = 0;
            }
        }
        out
    }

    pub fn extract(&self, field: &[f64], sizes: &[usize]) -> Vec<f64> {
        self.global_indices(sizes).into_iter().map(|g| field[g]).collect()
    }
}

/// Non-overlapping tiles of `shape` covering as much of `sizes` as fits.
pub fn tile(sizes: &[usize], shape: &[usize]) -> Vec<Patch> {
    let counts: Vec<usize> = sizes.iter().zip(shape).map(|(n, p)| n / p).collect();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut origin = vec![0; sizes.len()];
        for d in (0..sizes.len()).rev() {
            origin[d] = (k % counts[d]) * shape[d];
            k /= counts[d];
        }
        out.push(Patch {
            origin,
            shape: shape.to_vec(),
        });
    }
    out
}

pub const MLP_WIDTH: usize = 32;

/// Two hidden tanh layers over the `3^d` neighbourhood of each point, with a
/// residual connection: `ũ = u + f(window)`. The output layer starts at
/// zero so the initial transform is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub n_in: usize,
    pub params: Vec<f64>,
}

struct MlpLayout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

impl Mlp {
    fn layout(n_in: usize) -> MlpLayout {
        let h = MLP_WIDTH;
        let w1 = 0;
        let b1 = w1 + h * n_in;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + h;
        MlpLayout {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            len: b3 + 1,
        }
    }

    pub fn new(n_dims: usize, rng: &mut ChaCha8Rng) -> Self {
        let n_in = 3usize.pow(n_dims as u32);
        let l = Self::layout(n_in);
        let mut params = vec![0.0; l.len];
        let a1 = (6.0 / (n_in + MLP_WIDTH) as f64).sqrt();
        for w in &mut params[l.w1..l.b1] {
            *w = rng.gen_range(-a1..a1);
        }
        let a2 = (6.0 / (2 * MLP_WIDTH) as f64).sqrt();
        for w in &mut params[l.w2..l.b2] {
            *w = rng.gen_range(-a2..a2);
        }
        Self { n_in, params }
    }

    fn window(&self, data: &[f64], sizes: &[usize], g: usize) -> Vec<f64> {
        let d = sizes.len();
        let mut idx = vec![0usize; d];
        let mut rem = g;
        for k in (0..d).rev() {
            idx[k] = rem % sizes[k];
            rem /= sizes[k];
        }
        let mut out = Vec::with_capacity(self.n_in);
        for code in 0..self.n_in {
            let mut c = code;
            let mut flat = 0;
            for k in 0..d {
                let off = (c % 3) as isize - 1;
                c /= 3;
                let j = (idx[k] as isize + off).clamp(0, sizes[k] as isize - 1) as usize;
                flat = flat * sizes[k] + j;
            }
            out.push(data[flat]);
        }
        out
    }

    /// Hidden activations and output for one window.
    fn forward_point(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let l = Self::layout(self.n_in);
        let p = &self.params;
        let h1: Vec<f64> = (0..MLP_WIDTH)
            .map(|i| {
                let row = &p[l.w1 + i * self.n_in..l.w1 + (i + 1) * self.n_in];
                (p[l.b1 + i] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).tanh()
            })
            .collect();
        let h2: Vec<f64> = (0..MLP_WIDTH)
            .map(|i| {
                let row = &p[l.w2 + i * MLP_WIDTH..l.w2 + (i + 1) * MLP_WIDTH];
                (p[l.b2 + i] + row.iter().zip(&h1).map(|(w, v)| w * v).sum::<f64>()).tanh()
            })
            .collect();
        let out = p[l.b3] + p[l.w3..l.b3].iter().zip(&h2).map(|(w, v)| w * v).sum::<f64>();
        (h1, h2, out)
    }

    pub fn forward(&self, data: &[f64], sizes: &[usize], indices: &[usize]) -> Vec<f64> {
        indices
            .iter()
            .map(|&g| data[g] + self.forward_point(&self.window(data, sizes, g)).2)
            .collect()
    }

    pub fn backward(&self, data: &[f64], sizes: &[usize], indices: &[usize], upstream: &[f64], grad: &mut [f64]) {
        let l = Self::layout(self.n_in);
        let p = &self.params;
        for (&g, &up) in indices.iter().zip(upstream) {
            if up == 0.0 {
                continue;
            }
            let x = self.window(data, sizes, g);
            let (h1, h2, _) = self.forward_point(&x);
            grad[l.b3] += up;
            let mut d2 = vec![0.0; MLP_WIDTH];
            for i in 0..MLP_WIDTH {
                grad[l.w3 + i] += up * h2[i];
                d2[i] = up * p[l.w3 + i] * (1.0 - h2[i] * h2[i]);
            }
            let mut d1 = vec![0.0; MLP_WIDTH];
            for i in 0..MLP_WIDTH {
                grad[l.b2 + i] += d2[i];
                for j in 0..MLP_WIDTH {
                    grad[l.w2 + i * MLP_WIDTH + j] += d2[i] * h1[j];
                    d1[j] += d2[i] * p[l.w2 + i * MLP_WIDTH + j];
                }
            }
            for j in 0..MLP_WIDTH {
                let dz = d1[j] * (1.0 - h1[j] * h1[j]);
                grad[l.b1 + j] += dz;
                for k in 0..self.n_in {
                    grad[l.w1 + j * self.n_in + k] += dz * x[k];
                }
            }
        }
    }
}

/// Learnable state of one transformed input.
#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    Identity,
    /// A full-grid field initialised to the data.
    FreeField(Vec<f64>),
    Mlp(Mlp),
}

impl Transform {
    pub fn new(kind: TransformKind, data: &[f64], n_dims: usize, rng: &mut ChaCha8Rng) -> Self {
        match kind {
            TransformKind::Identity => Transform::Identity,
            TransformKind::FreeField => Transform::FreeField(data.to_vec()),
            TransformKind::Mlp => Transform::Mlp(Mlp::new(n_dims, rng)),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Transform::Identity => &[],
            Transform::FreeField(f) => f,
            Transform::Mlp(m) => &m.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Transform::Identity => &mut [],
            Transform::FreeField(f) => f,
            Transform::Mlp(m) => &mut m.params,
        }
    }

    /// `ũ` on the patch points given by their global `indices`.
    pub fn forward(&self, data: &[f64], sizes: &[usize], indices: &[usize]) -> Vec<f64> {
        match self {
            Transform::Identity => indices.iter().map(|&g| data[g]).collect(),
            Transform::FreeField(f) => indices.iter().map(|&g| f[g]).collect(),
            Transform::Mlp(m) => m.forward(data, sizes, indices),
        }
    }

    /// Accumulates `∂l/∂params` from `∂l/∂ũ` on the patch.
    pub fn backward(&self, data: &[f64], sizes: &[usize], indices: &[usize], upstream: &[f64], grad: &mut [f64]) {
        match self {
            Transform::Identity => {}
            Transform::FreeField(_) => {
                for (&g, u) in indices.iter().zip(upstream) {
                    grad[g] += u;
                }
            }
            Transform::Mlp(m) => m.backward(data, sizes, indices, upstream, grad),
        }
    }
}
