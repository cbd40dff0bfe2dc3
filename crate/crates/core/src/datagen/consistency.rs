//! Self-consistency of generated data against its own ground truth.

use std::collections::BTreeMap;

use super::Dataset;
use crate::error::{Error, Result};
use crate::grid::{dim_labels, MultiIndex};
use crate::stencil::derivative_field;

fn derivative(d: &Dataset, field: &[f64], label: &str) -> Result<Vec<f64>> {
    let m = MultiIndex::parse(label, d.sizes.len(), &dim_labels(true))?;
    let mut out = field.to_vec();
    for (dim, &o) in m.orders().iter().enumerate() {
        if o > 0 {
            out = derivative_field(&out, &d.sizes, &d.steps, dim, o as usize);
        }
    }
    Ok(out)
}

/// Pointwise value of a term label such as `u*u_x` or `u^2*v`.
pub fn eval_term(d: &Dataset, label: &str) -> Result<Vec<f64>> {
    let mut out = vec![1.0; d.n_points()];
    if label == "1" {
        return Ok(out);
    }
    for factor in label.split('*') {
        let (name, exp) = match factor.split_once('^') {
            Some((n, e)) => (
                n,
                e.parse::<f64>()
                    .map_err(|_| Error::Template(format!("bad exponent in term {label:?}")))?,
            ),
            None => (factor, 1.0),
        };
        let values = match name.split_once('_') {
            Some((field, axes)) => derivative(d, d.field(field)?, axes)?,
            None => d.field(name)?.to_vec(),
        };
        for (o, v) in out.iter_mut().zip(values) {
            *o *= if exp == 1.0 { v } else { v.powf(exp) };
        }
    }
    Ok(out)
}

/// `u_t − Σ ξ_j term_j` at every grid point for the first field.
pub fn residual_field(d: &Dataset, terms: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let (name, u) = d
        .fields
        .first()
        .ok_or_else(|| Error::Shape("dataset has no fields".into()))?;
    let mut r = derivative(d, u, "t")?;
    for (label, c) in terms {
        for (ri, v) in r.iter_mut().zip(eval_term(d, label)?) {
            *ri -= c * v;
        }
    }
    if d.meta.get("generator").map(String::as_str) == Some("porous") {
        let m = d.truth_params["m"];
        let um: Vec<f64> = u.iter().map(|v| v.powf(m)).collect();
        for (ri, v) in r.iter_mut().zip(derivative(d, &um, "xx")?) {
            *ri -= v;
        }
    }
    let _ = name;
    Ok(r)
}

/// Median of `|u_t − rhs|` divided by the RMS of `u_t`.
pub fn median_relative_residual(d: &Dataset) -> Result<f64> {
    let r = residual_field(d, &d.truth)?;
    let ut = derivative(d, &d.fields[0].1, "t")?;
    let scale = (ut.iter().map(|v| v * v).sum::<f64>() / ut.len() as f64).sqrt();
    let mut a: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    a.sort_by(f64::total_cmp);
    Ok(a[a.len() / 2] / scale)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    fn gate_and_refinement(coarse: &Dataset, fine: &Dataset, name: &str) {
        let rc = median_relative_residual(coarse).unwrap();
        let rf = median_relative_residual(fine).unwrap();
        assert!(rc <= 0.05, "{name}: coarse residual {rc}");
        assert!(rf < rc, "{name}: refinement {rc} -> {rf}");
    }

    #[test]
    fn diffusion_is_self_consistent() {
        let c = DiffusionConfig {
            nt: 32,
            nx: 32,
            dt: 1.0,
            ..DiffusionConfig::default()
        };
        let f = DiffusionConfig {
            nt: 64,
            nx: 64,
            dt: 0.5,
            ..c.clone()
        };
        gate_and_refinement(&gen_diffusion(&c).unwrap(), &gen_diffusion(&f).unwrap(), "diffusion");
    }

    #[test]
    fn burgers_is_self_consistent() {
        for nu in [0.1, 0.0] {
            let c = BurgersConfig {
                nu,
                nt: 32,
                nx: 64,
                dt: 0.1,
                ..BurgersConfig::default()
            };
            let f = BurgersConfig {
                nt: 64,
                nx: 128,
                dt: 0.05,
                ..c.clone()
            };
            gate_and_refinement(&gen_burgers(&c).unwrap(), &gen_burgers(&f).unwrap(), "burgers");
        }
    }

    #[test]
    fn porous_is_self_consistent() {
        let c = PorousConfig {
            nt: 32,
            nx: 32,
            dt: 0.1,
            ..PorousConfig::default()
        };
        let f = PorousConfig {
            nt: 64,
            nx: 64,
            dt: 0.05,
            ..c.clone()
        };
        gate_and_refinement(&gen_porous_medium(&c).unwrap(), &gen_porous_medium(&f).unwrap(), "porous");
    }

    #[test]
    fn reaction_diffusion_is_self_consistent() {
        let c = RdConfig {
            nt: 16,
            n: 32,
            dt: 0.1,
            ..RdConfig::default()
        };
        let f = RdConfig {
            nt: 32,
            n: 64,
            dt: 0.05,
            ..c.clone()
        };
        gate_and_refinement(
            &gen_reaction_diffusion(&c).unwrap(),
            &gen_reaction_diffusion(&f).unwrap(),
            "reaction-diffusion",
        );
    }

    #[test]
    fn term_evaluation() {
        let mut d = Dataset::new(vec![5, 6], vec![1.0, 0.5]).unwrap();
        let u: Vec<f64> = (0..30).map(|p| 1.0 + (p % 6) as f64 * 0.5).collect();
        d.push_field("u", u.clone()).unwrap();
        let uux = eval_term(&d, "u*u_x").unwrap();
        for (a, b) in uux.iter().zip(&u) {
            assert!((a - b).abs() < 1e-12);
        }
        let sq = eval_term(&d, "u^2").unwrap();
        assert!((sq[7] - u[7] * u[7]).abs() < 1e-12);
        assert!(eval_term(&d, "w").is_err());
    }
}
