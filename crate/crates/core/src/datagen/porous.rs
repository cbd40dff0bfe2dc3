//! Porous-medium equation `u_t = (u^m)_xx` from the Barenblatt solution.

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PorousConfig {
    pub m: f64,
    pub nt: usize,
    pub nx: usize,
    pub t0: f64,
    pub dt: f64,
    pub mass: f64,
    /// Half-width of the sampled interval as a fraction of the support
    /// radius at `t0`; below one keeps every sample strictly positive.
    pub support_fraction: f64,
    /// Constant added to the samples; nonzero values break the equation.
    pub shift: f64,
}

impl Default for PorousConfig {
    fn default() -> Self {
        Self {
            m: 2.675,
            nt: 128,
            nx: 128,
            t0: 1.0,
            dt: 0.05,
            mass: 1.0,
            support_fraction: 0.8,
            shift: 0.0,
        }
    }
}

/// Closed-form source solution with total mass `mass`, normalised so that
/// it is self-similar from `t = 0`.
#[derive(Clone, Copy, Debug)]
pub struct Barenblatt {
    pub m: f64,
    alpha: f64,
    k: f64,
    c: f64,
}

impl Barenblatt {
    pub fn new(m: f64, mass: f64) -> Result<Self> {
        if !(m > 0.0) || !(mass > 0.0) {
            return Err(Error::Generator(format!("porous: need m > 0 and mass > 0, got m={m}, mass={mass}")));
        }
        if m < 1.0 {
            return Err(Error::Generator("porous: fast diffusion (m < 1) is not supported".into()));
        }
        let alpha = 1.0 / (m + 1.0);
        if (m - 1.0).abs() < 1e-12 {
            return Ok(Self { m, alpha, k: 0.0, c: mass });
        }
        let k = alpha * (m - 1.0) / (2.0 * m);
        let p = 1.0 / (m - 1.0);
        // ∫ (C − kξ²)_+^p dξ = C^{p + 1/2} k^{-1/2} ∫_{-π/2}^{π/2} cos^{2p+1}θ dθ
        let nq = 20_000;
        let h = std::f64::consts::PI / nq as f64;
        let integral: f64 = (0..nq)
            .map(|q| {
                let th = -std::f64::consts::FRAC_PI_2 + (q as f64 + 0.5) * h;
                th.cos().powf(2.0 * p + 1.0)
            })
            .sum::<f64>()
            * h;
        let c = (mass * k.sqrt() / integral).powf(1.0 / (p + 0.5));
        Ok(Self { m, alpha, k, c })
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        if self.k == 0.0 {
            return self.c * (-x * x / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt();
        }
        let xi = x * t.powf(-self.alpha);
        let base = self.c - self.k * xi * xi;
        if base <= 0.0 {
            0.0
        } else {
            t.powf(-self.alpha) * base.powf(1.0 / (self.m - 1.0))
        }
    }

    /// Support half-width at time `t`.
    pub fn radius(&self, t: f64) -> f64 {
        if self.k == 0.0 {
            f64::INFINITY
        } else {
            (self.c / self.k).sqrt() * t.powf(self.alpha)
        }
    }
}

pub fn gen_porous_medium(cfg: &PorousConfig) -> Result<Dataset> {
    let b = Barenblatt::new(cfg.m, cfg.mass)?;
    if !(cfg.t0 > 0.0) || !(cfg.dt > 0.0) || !(cfg.support_fraction > 0.0 && cfg.support_fraction < 1.0) {
        return Err(Error::Generator("porous: need t0 > 0, dt > 0 and 0 < support_fraction < 1".into()));
    }
    let half = if b.radius(cfg.t0).is_finite() {
        cfg.support_fraction * b.radius(cfg.t0)
    } else {
        4.0 * cfg.t0.sqrt()
    };
    let dx = 2.0 * half / (cfg.nx - 1) as f64;
    let mut d = Dataset::new(vec![cfg.nt, cfg.nx], vec![cfg.dt, dx])?;
    let mut u = Vec::with_capacity(cfg.nt * cfg.nx);
    for i in 0..cfg.nt {
        let t = cfg.t0 + i as f64 * cfg.dt;
        for j in 0..cfg.nx {
            u.push(b.eval(t, -half + j as f64 * dx) + cfg.shift);
        }
    }
    if cfg.shift == 0.0 && u.iter().any(|&v| v <= 0.0) {
        return Err(Error::Generator("porous: sampled region leaves the support".into()));
    }
    d.push_field("u", u)?;
    d.truth_params.insert("m".into(), cfg.m);
    d.meta.insert("generator".into(), "porous".into());
    d.meta.insert("m".into(), cfg.m.to_string());
    d.meta.insert("shift".into(), cfg.shift.to_string());
    d.meta.insert("t0".into(), cfg.t0.to_string());
    Ok(d)
}
