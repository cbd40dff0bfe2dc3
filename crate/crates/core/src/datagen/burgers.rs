//! Burgers' equation `u_t + u u_x = ν u_xx` on a periodic interval, integrated
//! on an oversampled grid with a conservative scheme and then subsampled.

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurgersInitial {
    /// `exp(-(x + 2)²)`
    Gaussian,
    /// `sin(2π x / length)`
    Sine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BurgersConfig {
    pub nu: f64,
    pub nt: usize,
    pub nx: usize,
    pub dt: f64,
    pub x_min: f64,
    pub length: f64,
    pub initial: BurgersInitial,
    pub oversample: usize,
    /// Integration substeps per output step on the fine grid; chosen from
    /// the stability limits when absent.
    pub substeps: Option<usize>,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            nt: 128,
            nx: 128,
            dt: 0.1,
            x_min: -8.0,
            length: 16.0,
            initial: BurgersInitial::Gaussian,
            oversample: 8,
            substeps: None,
        }
    }
}

fn flux(u: f64) -> f64 {
    0.5 * u * u
}

/// Exact Riemann flux for the convex flux `u²/2`.
pub fn godunov_flux(ul: f64, ur: f64) -> f64 {
    if ul <= ur {
        if ul > 0.0 {
            flux(ul)
        } else if ur < 0.0 {
            flux(ur)
        } else {
            0.0
        }
    } else {
        flux(ul).max(flux(ur))
    }
}

fn rate(u: &[f64], nu: f64, dx: f64, out: &mut [f64]) {
    let n = u.len();
    for i in 0..n {
        let l = u[(i + n - 1) % n];
        let r = u[(i + 1) % n];
        let c = u[i];
        out[i] = if nu > 0.0 {
            -(flux(r) - flux(l)) / (2.0 * dx) + nu * (r - 2.0 * c + l) / (dx * dx)
        } else {
            -(godunov_flux(c, r) - godunov_flux(l, c)) / dx
        };
    }
}

/// SSP-RK3 with central fluxes when viscous; forward Euler with Godunov
/// fluxes when inviscid.
fn advance(u: &mut Vec<f64>, nu: f64, dx: f64, h: f64, k1: &mut [f64], tmp: &mut Vec<f64>) {
    if nu == 0.0 {
        rate(u, nu, dx, k1);
        for (a, b) in u.iter_mut().zip(k1.iter()) {
            *a += h * b;
        }
        return;
    }
    let u0 = u.clone();
    rate(u, nu, dx, k1);
    for i in 0..u.len() {
        tmp[i] = u0[i] + h * k1[i];
    }
    rate(tmp, nu, dx, k1);
    for i in 0..u.len() {
        tmp[i] = 0.75 * u0[i] + 0.25 * (tmp[i] + h * k1[i]);
    }
    rate(tmp, nu, dx, k1);
    for i in 0..u.len() {
        u[i] = u0[i] / 3.0 + 2.0 / 3.0 * (tmp[i] + h * k1[i]);
    }
}

pub fn initial_profile(cfg: &BurgersConfig, x: f64) -> f64 {
    match cfg.initial {
        BurgersInitial::Gaussian => (-(x + 2.0).powi(2)).exp(),
        BurgersInitial::Sine => (2.0 * std::f64::consts::PI * (x - cfg.x_min) / cfg.length).sin(),
    }
}

/// Fine-grid trajectory: `nt` snapshots of `nx · oversample` values.
pub fn integrate_fine(cfg: &BurgersConfig) -> Result<Vec<Vec<f64>>> {
    if cfg.nu < 0.0 || cfg.oversample == 0 || cfg.nx == 0 || cfg.nt == 0 || !(cfg.dt > 0.0) {
        return Err(Error::Generator("burgers: need nu >= 0, positive sizes and dt".into()));
    }
    let nf = cfg.nx * cfg.oversample;
    let dx = cfg.length / nf as f64;
    let mut u: Vec<f64> = (0..nf).map(|i| initial_profile(cfg, cfg.x_min + i as f64 * dx)).collect();
    // max|u| does not grow for either scheme
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let cfl = if cfg.nu > 0.0 { 1.0 } else { 0.5 };
    let mut limit = cfl * dx / umax;
    if cfg.nu > 0.0 {
        limit = limit.min(0.4 * dx * dx / cfg.nu);
    }
    let substeps = match cfg.substeps {
        Some(s) => {
            let h = cfg.dt / s as f64;
            if s == 0 || h > limit {
                return Err(Error::Generator(format!(
                    "burgers: substep {h:.3e} exceeds the stability limit {limit:.3e}; use at least {} substeps",
                    (cfg.dt / limit).ceil()
                )));
            }
            s
        }
        None => (cfg.dt / limit).ceil() as usize,
    };
    let h = cfg.dt / substeps as f64;
    let mut k1 = vec![0.0; nf];
    let mut tmp = vec![0.0; nf];
    let mut out = Vec::with_capacity(cfg.nt);
    out.push(u.clone());
    for _ in 1..cfg.nt {
        for _ in 0..substeps {
            advance(&mut u, cfg.nu, dx, h, &mut k1, &mut tmp);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Generator("burgers: solution blew up; use a smaller step".into()));
        }
        out.push(u.clone());
    }
    Ok(out)
}

pub fn gen_burgers(cfg: &BurgersConfig) -> Result<Dataset> {
    let fine = integrate_fine(cfg)?;
    let dx = cfg.length / cfg.nx as f64;
    let mut d = Dataset::new(vec![cfg.nt, cfg.nx], vec![cfg.dt, dx])?;
    let u = fine
        .iter()
        .flat_map(|row| row.iter().step_by(cfg.oversample).copied())
        .collect();
    d.push_field("u", u)?;
    d.truth.insert("u*u_x".into(), -1.0);
    if cfg.nu > 0.0 {
        d.truth.insert("u_xx".into(), cfg.nu);
    }
    d.meta.insert("generator".into(), "burgers".into());
    d.meta.insert("nu".into(), cfg.nu.to_string());
    d.meta.insert("x_min".into(), cfg.x_min.to_string());
    Ok(d)
}
