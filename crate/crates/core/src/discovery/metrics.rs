//! Thresholding and recovery metrics over named coefficient maps.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type Terms = BTreeMap<String, f64>;

/// Zeroes every value with `|v| < tau`.
pub fn threshold(values: &[f64], tau: f64) -> Vec<f64> {
    values.iter().map(|&v| if v.abs() < tau { 0.0 } else { v }).collect()
}

pub fn threshold_terms(terms: &Terms, tau: f64) -> Terms {
    terms.iter().filter(|(_, v)| v.abs() >= tau).map(|(k, v)| (k.clone(), *v)).collect()
}

fn nonzero(t: &Terms) -> impl Iterator<Item = &String> {
    t.iter().filter(|(_, v)| **v != 0.0).map(|(k, _)| k)
}

/// `TP / (TP + FN + FP)` over nonzero patterns after thresholding `est`.
pub fn tpr(truth: &Terms, est: &Terms, tau: f64) -> Result<f64> {
    let est = threshold_terms(est, tau);
    let t: Vec<&String> = nonzero(truth).collect();
    let e: Vec<&String> = nonzero(&est).collect();
    let tp = t.iter().filter(|k| e.contains(k)).count();
    let fn_ = t.len() - tp;
    let fp = e.len() - tp;
    let denom = tp + fn_ + fp;
    if denom == 0 {
        return Err(Error::Metrics("both coefficient sets are empty".into()));
    }
    Ok(tp as f64 / denom as f64)
}

/// Largest relative error over the true nonzero terms; a missing estimate
/// counts as zero.
pub fn e_inf(truth: &Terms, est: &Terms) -> Result<f64> {
    let mut worst: Option<f64> = None;
    for (k, &xi) in truth.iter().filter(|(_, v)| **v != 0.0) {
        let e = est.get(k).copied().unwrap_or(0.0);
        let r = (xi - e).abs() / xi.abs();
        worst = Some(worst.map_or(r, |w: f64| w.max(r)));
    }
    worst.ok_or_else(|| Error::Metrics("truth has no nonzero terms".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn terms(items: &[(&str, f64)]) -> Terms {
        items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn tpr_counts() {
        let truth = terms(&[("a", 1.0), ("b", 1.0), ("c", 1.0)]);
        let est = terms(&[("a", 0.9), ("b", 1.1), ("c", 1.0), ("d", 0.5), ("e", 0.001)]);
        assert_eq!(tpr(&truth, &est, 0.02).unwrap(), 0.75);
        assert_eq!(tpr(&truth, &truth, 0.02).unwrap(), 1.0);
        assert!(tpr(&Terms::new(), &Terms::new(), 0.02).is_err());
    }

    #[test]
    fn e_inf_arithmetic() {
        let truth = terms(&[("u*u_x", 1.0), ("u_xx", 0.1)]);
        let est = terms(&[("u*u_x", 0.9), ("u_xx", 0.12)]);
        assert!((e_inf(&truth, &est).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(e_inf(&truth, &terms(&[("u*u_x", 1.0)])).unwrap(), 1.0);
        assert!(e_inf(&Terms::new(), &est).is_err());
    }

    proptest! {
        #[test]
        fn threshold_is_idempotent(v in proptest::collection::vec(-1.0f64..1.0, 0..20), tau in 0.0f64..0.5) {
            let once = threshold(&v, tau);
            prop_assert_eq!(threshold(&once, tau), once.clone());
            for (a, b) in v.iter().zip(&once) {
                prop_assert!(*b == 0.0 || a == b);
            }
        }
    }
}
