//! Mean-reduced data-fit losses and the L1 sparsity penalty.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossNorm {
    #[default]
    L1,
    L2,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `mean(|a − b|)` or `mean((a − b)²)`, with `∂/∂a` (the gradient with
/// respect to `b` is its negation).
pub fn fit_loss(norm: LossNorm, a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(a.len(), b.len(), "loss operands differ in length");
    let n = a.len().max(1) as f64;
    match norm {
        LossNorm::L1 => {
            let l = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n;
            (l, a.iter().zip(b).map(|(x, y)| sign(x - y) / n).collect())
        }
        LossNorm::L2 => {
            let l = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n;
            (l, a.iter().zip(b).map(|(x, y)| 2.0 * (x - y) / n).collect())
        }
    }
}

/// `λ Σ|θ_k|` over the sparse parameters, and its subgradient.
pub fn sparsity(lambda: f64, params: &[f64], sparse: &[bool]) -> (f64, Vec<f64>) {
    let mut l = 0.0;
    let g = params
        .iter()
        .zip(sparse)
        .map(|(&p, &s)| {
            if s {
                l += p.abs();
                lambda * sign(p)
            } else {
                0.0
            }
        })
        .collect();
    (lambda * l, g)
}
