//! Heat equation `u_t = ν u_xx` from a finite sine series.

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionConfig {
    pub nu: f64,
    pub nt: usize,
    pub nx: usize,
    pub dt: f64,
    /// Spatial period; `x_j = j · length / nx`.
    pub length: f64,
    /// `(wavenumber, amplitude)` pairs; wavenumbers are in units of `2π/length`.
    pub modes: Vec<(f64, f64)>,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            nu: 0.01,
            nt: 128,
            nx: 128,
            dt: 0.5,
            length: 2.0 * std::f64::consts::PI,
            modes: vec![(1.0, 1.0), (2.0, 0.5), (3.0, 0.25)],
        }
    }
}

pub fn gen_diffusion(cfg: &DiffusionConfig) -> Result<Dataset> {
    if !(cfg.nu > 0.0) {
        return Err(Error::Generator(format!("diffusivity must be positive, got {}", cfg.nu)));
    }
    let dx = cfg.length / cfg.nx as f64;
    let mut d = Dataset::new(vec![cfg.nt, cfg.nx], vec![cfg.dt, dx])?;
    let base = 2.0 * std::f64::consts::PI / cfg.length;
    let mut u = Vec::with_capacity(cfg.nt * cfg.nx);
    for i in 0..cfg.nt {
        let t = i as f64 * cfg.dt;
        for j in 0..cfg.nx {
            let x = j as f64 * dx;
            u.push(
                cfg.modes
                    .iter()
                    .map(|&(k, a)| {
                        let k = k * base;
                        a * (-cfg.nu * k * k * t).exp() * (k * x).sin()
                    })
                    .sum(),
            );
        }
    }
    d.push_field("u", u)?;
    d.truth.insert("u_xx".into(), cfg.nu);
    d.meta.insert("generator".into(), "diffusion".into());
    d.meta.insert("nu".into(), cfg.nu.to_string());
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn satisfies_the_pde_analytically() {
        let cfg = DiffusionConfig {
            modes: vec![(1.0, 1.0)],
            nt: 8,
            nx: 16,
            ..DiffusionConfig::default()
        };
        let d = gen_diffusion(&cfg).unwrap();
        let u = d.field("u").unwrap();
        // single mode: u_t = -ν k² u and u_xx = -k² u, so u_t = ν u_xx
        for (p, &v) in u.iter().enumerate() {
            let t = (p / 16) as f64 * cfg.dt;
            let x = (p % 16) as f64 * d.steps[1];
            assert!((v - (-0.01 * t).exp() * x.sin()).abs() < 1e-14);
        }
        assert_eq!(d.truth["u_xx"], 0.01);
    }

    #[test]
    fn initial_slice_is_the_sine_series() {
        let cfg = DiffusionConfig::default();
        let d = gen_diffusion(&cfg).unwrap();
        let u = d.field("u").unwrap();
        for j in 0..cfg.nx {
            let x = j as f64 * d.steps[1];
            let want = x.sin() + 0.5 * (2.0 * x).sin() + 0.25 * (3.0 * x).sin();
            assert!((u[j] - want).abs() < 1e-14);
        }
        assert!(gen_diffusion(&DiffusionConfig { nu: 0.0, ..cfg }).is_err());
    }
}
