//! λ-ω reaction-diffusion system for `A = u + i v` on a periodic square:
//!
//! `u_t = D1 ∇²u + (1 − |A|²) u + β |A|² v`
//! `v_t = D2 ∇²v − β |A|² u + (1 − |A|²) v`

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RdInitial {
    /// One-armed spiral `tanh(r) e^{i(θ − r)}`.
    Spiral,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RdConfig {
    pub d1: f64,
    pub d2: f64,
    pub beta: f64,
    pub nt: usize,
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub substeps: usize,
    pub initial: RdInitial,
    /// Initial amplitude for the uniform state.
    pub amplitude: f64,
}

impl Default for RdConfig {
    fn default() -> Self {
        Self {
            d1: 0.1,
            d2: 0.1,
            beta: 1.0,
            nt: 128,
            n: 64,
            length: 20.0,
            dt: 0.05,
            substeps: 4,
            initial: RdInitial::Spiral,
            amplitude: 0.3,
        }
    }
}

/// Periodic fourth-order Laplacian.
fn laplacian(f: &[f64], n: usize, h: f64, out: &mut [f64]) {
    let w = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
    let at = |i: isize, j: isize| f[(i.rem_euclid(n as isize) as usize) * n + j.rem_euclid(n as isize) as usize];
    for i in 0..n as isize {
        for j in 0..n as isize {
            let mut s = 0.0;
            for (k, &wk) in w.iter().enumerate() {
                let o = k as isize - 2;
                s += wk * (at(i + o, j) + at(i, j + o));
            }
            out[i as usize * n + j as usize] = s / (h * h);
        }
    }
}

fn rhs(cfg: &RdConfig, h: f64, u: &[f64], v: &[f64], du: &mut [f64], dv: &mut [f64]) {
    laplacian(u, cfg.n, h, du);
    laplacian(v, cfg.n, h, dv);
    for p in 0..u.len() {
        let r2 = u[p] * u[p] + v[p] * v[p];
        du[p] = cfg.d1 * du[p] + (1.0 - r2) * u[p] + cfg.beta * r2 * v[p];
        dv[p] = cfg.d2 * dv[p] - cfg.beta * r2 * u[p] + (1.0 - r2) * v[p];
    }
}

pub fn gen_reaction_diffusion(cfg: &RdConfig) -> Result<Dataset> {
    if !(cfg.d1 > 0.0 && cfg.d2 > 0.0) {
        return Err(Error::Generator("reaction-diffusion: diffusivities must be positive".into()));
    }
    if cfg.substeps == 0 || !(cfg.dt > 0.0) || cfg.n < 5 {
        return Err(Error::Generator("reaction-diffusion: need substeps >= 1, dt > 0, n >= 5".into()));
    }
    let n = cfg.n;
    let h = cfg.length / n as f64;
    let np = n * n;
    let mut u = vec![0.0; np];
    let mut v = vec![0.0; np];
    for i in 0..n {
        for j in 0..n {
            let x = -cfg.length / 2.0 + i as f64 * h;
            let y = -cfg.length / 2.0 + j as f64 * h;
            let (a, b) = match cfg.initial {
                RdInitial::Spiral => {
                    let r = x.hypot(y);
                    let th = y.atan2(x);
                    (r.tanh() * (th - r).cos(), r.tanh() * (th - r).sin())
                }
                RdInitial::Uniform => (cfg.amplitude, 0.0),
            };
            u[i * n + j] = a;
            v[i * n + j] = b;
        }
    }
    let hs = cfg.dt / cfg.substeps as f64;
    let mut us = Vec::with_capacity(cfg.nt * np);
    let mut vs = Vec::with_capacity(cfg.nt * np);
    let mut k = [(); 4].map(|_| (vec![0.0; np], vec![0.0; np]));
    let mut tu = vec![0.0; np];
    let mut tv = vec![0.0; np];
    for step in 0..cfg.nt {
        us.extend_from_slice(&u);
        vs.extend_from_slice(&v);
        if step + 1 == cfg.nt {
            break;
        }
        for _ in 0..cfg.substeps {
            for s in 0..4 {
                let c = [0.0, 0.5, 0.5, 1.0][s];
                if s == 0 {
                    tu.copy_from_slice(&u);
                    tv.copy_from_slice(&v);
                } else {
                    let (pu, pv) = &k[s - 1];
                    for p in 0..np {
                        tu[p] = u[p] + c * hs * pu[p];
                        tv[p] = v[p] + c * hs * pv[p];
                    }
                }
                let (ku, kv) = &mut k[s];
                rhs(cfg, h, &tu, &tv, ku, kv);
            }
            for p in 0..np {
                u[p] += hs / 6.0 * (k[0].0[p] + 2.0 * k[1].0[p] + 2.0 * k[2].0[p] + k[3].0[p]);
                v[p] += hs / 6.0 * (k[0].1[p] + 2.0 * k[1].1[p] + 2.0 * k[2].1[p] + k[3].1[p]);
            }
        }
        let peak = u.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)));
        if !peak.is_finite() || peak > 10.0 {
            return Err(Error::Generator(format!(
                "reaction-diffusion blew up at step {}; reduce dt or raise substeps",
                step + 1
            )));
        }
    }
    let mut d = Dataset::new(vec![cfg.nt, n, n], vec![cfg.dt, h, h])?;
    d.push_field("u", us)?;
    d.push_field("v", vs)?;
    for (label, c) in [
        ("u_xx", cfg.d1),
        ("u_yy", cfg.d1),
        ("u", 1.0),
        ("u^3", -1.0),
        ("u*v^2", -1.0),
        ("u^2*v", cfg.beta),
        ("v^3", cfg.beta),
    ] {
        if c != 0.0 {
            d.truth.insert(label.into(), c);
        }
    }
    d.meta.insert("generator".into(), "reaction_diffusion".into());
    d.meta.insert("d1".into(), cfg.d1.to_string());
    d.meta.insert("d2".into(), cfg.d2.to_string());
    d.meta.insert("beta".into(), cfg.beta.to_string());
    Ok(d)
}
