//! Restarted flexible GMRES with right preconditioning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multigrid::GridHierarchy;
use crate::sparse::{dot, norm2, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FgmresConfig {
    pub restart: usize,
    pub max_restarts: usize,
    pub tol: f64,
    /// Cap on total inner iterations; `None` means `restart * max_restarts`.
    pub max_iterations: Option<usize>,
}

impl Default for FgmresConfig {
    fn default() -> Self {
        Self {
            restart: 40,
            max_restarts: 20,
            tol: 1e-8,
            max_iterations: None,
        }
    }
}

impl FgmresConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 || self.max_restarts == 0 {
            return Err(Error::Config("fgmres restart and max_restarts must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("fgmres tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    fn budget(&self) -> usize {
        self.max_iterations
            .unwrap_or(self.restart * self.max_restarts)
    }
}

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.spmv_into(x, y)
    }
}

pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>>;
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(r.to_vec())
    }
}

impl Preconditioner for GridHierarchy {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.precondition(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FgmresOutcome {
    pub x: Vec<f64>,
    /// Relative residual before the first iteration and after each one.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// True relative residual `‖b − Mx‖ / ‖b‖` at exit.
    pub residual: f64,
    pub converged: bool,
    /// A full restart cycle made no progress.
    pub stagnated: bool,
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

fn true_residual(op: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) -> Result<f64> {
    op.apply(x, r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(norm2(r))
}

/// Solves `M x = b`. Not converging within the budget is reported in the
/// outcome, not as an error.
pub fn fgmres_solve(
    op: &dyn LinearOperator,
    pc: &dyn Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &FgmresConfig,
) -> Result<FgmresOutcome> {
    cfg.validate()?;
    let n = op.dim();
    if b.len() != n || x0.is_some_and(|x| x.len() != n) {
        return Err(Error::Shape(format!("fgmres: operator is {n}x{n}, rhs has {}", b.len())));
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(FgmresOutcome {
            x: vec![0.0; n],
            history: vec![0.0],
            iterations: 0,
            residual: 0.0,
            converged: true,
            stagnated: false,
        });
    }
    let m = cfg.restart;
    let budget = cfg.budget();
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut beta = true_residual(op, b, &x, &mut r)?;
    let mut history = vec![beta / bnorm];
    let mut iterations = 0;
    let mut stagnated = false;

    for _ in 0..cfg.max_restarts {
        if beta / bnorm <= cfg.tol || iterations >= budget {
            break;
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|ri| ri / beta).collect());
        // column-major Hessenberg: h[j] has j + 2 entries
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<(f64, f64)> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < budget {
            let zk = pc.apply(&v[k])?;
            op.apply(&zk, &mut w)?;
            let mut col = vec![0.0; k + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                col[i] = hij;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hij * vj;
                }
            }
            let hnext = norm2(&w);
            col[k + 1] = hnext;
            if !hnext.is_finite() || col.iter().any(|c| !c.is_finite()) {
                return Err(Error::Breakdown {
                    iteration: iterations + 1,
                });
            }
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c * a + s * bb;
                col[i + 1] = -s * a + c * bb;
            }
            let (c, s) = givens(col[k], col[k + 1]);
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            cs.push((c, s));
            h.push(col);
            z.push(zk);
            k += 1;
            iterations += 1;
            let est = g[k].abs() / bnorm;
            history.push(est);
            if est <= cfg.tol || hnext <= 1e-14 * beta {
                break;
            }
            v.push(w.iter().map(|wi| wi / hnext).collect());
        }
        // back substitution on the triangular part
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (yj, zj) in y.iter().zip(&z) {
            for (xi, zi) in x.iter_mut().zip(zj) {
                *xi += yj * zi;
            }
        }
        let new_beta = true_residual(op, b, &x, &mut r)?;
        if !new_beta.is_finite() {
            return Err(Error::Breakdown { iteration: iterations });
        }
        if new_beta >= beta * (1.0 - 1e-12) {
            stagnated = true;
            beta = new_beta;
            break;
        }
        beta = new_beta;
    }
    let residual = beta / bnorm;
    Ok(FgmresOutcome {
        x,
        history,
        iterations,
        residual,
        converged: residual <= cfg.tol,
        stagnated,
    })
}
