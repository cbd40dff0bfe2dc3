//! Differentiable least-squares PDE solve.
//!
//! Forward: `z* = argmin ‖Az − d‖²` through the normal equations, duals
//! `λ* = d − Az*`. Backward: for an upstream gradient `g_z`, solve
//! `AᵀA d_z = g_z`, then `d_λ = −A d_z`, `∂A = d_λ z*ᵀ + λ* d_zᵀ` (on the
//! sparsity pattern of `A` only) and `∂d = −d_λ`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::LinearSystem;
use crate::dense::SkylineCholesky;
use crate::error::{Error, Result};
use crate::fgmres::{fgmres_solve, FgmresConfig};
use crate::multigrid::{GridHierarchy, MultigridConfig};
use crate::sparse::{norm2, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    /// Direct when `n_v <= dense_threshold`, iterative otherwise.
    Auto,
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub path: SolverPath,
    pub dense_threshold: usize,
    pub fgmres: FgmresConfig,
    pub multigrid: MultigridConfig,
    /// Relative tolerance for the backward solve; defaults to `fgmres.tol`.
    pub backward_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            path: SolverPath::Auto,
            dense_threshold: 4096,
            fgmres: FgmresConfig::default(),
            multigrid: MultigridConfig::default(),
            backward_tol: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsedPath {
    Dense,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub path: UsedPath,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// A factorization or preconditioned iteration for `AᵀA`, shared between
/// the forward and backward solves.
#[derive(Debug)]
enum NormalSolver {
    Direct {
        normal: CsrMatrix,
        chol: SkylineCholesky,
    },
    Iterative {
        hierarchy: GridHierarchy,
        fgmres: FgmresConfig,
        backward_tol: f64,
    },
}

impl NormalSolver {
    fn path(&self) -> UsedPath {
        match self {
            NormalSolver::Direct { .. } => UsedPath::Dense,
            NormalSolver::Iterative { .. } => UsedPath::Iterative,
        }
    }

    fn solve(&self, rhs: &[f64], backward: bool) -> Result<(Vec<f64>, Telemetry)> {
        match self {
            NormalSolver::Direct { normal, chol } => {
                let mut x = chol.solve(rhs);
                // one step of iterative refinement
                let nx = normal.spmv(&x)?;
                let r: Vec<f64> = rhs.iter().zip(&nx).map(|(b, a)| b - a).collect();
                for (xi, ci) in x.iter_mut().zip(chol.solve(&r)) {
                    *xi += ci;
                }
                Ok((
                    x,
                    Telemetry {
                        path: UsedPath::Dense,
                        iterations: 0,
                        history: Vec::new(),
                    },
                ))
            }
            NormalSolver::Iterative {
                hierarchy,
                fgmres,
                backward_tol,
            } => {
                let cfg = FgmresConfig {
                    tol: if backward { *backward_tol } else { fgmres.tol },
                    ..*fgmres
                };
                let out = fgmres_solve(hierarchy.normal(0), hierarchy, rhs, None, &cfg)?;
                if !out.converged {
                    return Err(Error::NotConverged {
                        residual: out.residual,
                        iterations: out.iterations,
                        history: out.history,
                    });
                }
                Ok((
                    out.x,
                    Telemetry {
                        path: UsedPath::Iterative,
                        iterations: out.iterations,
                        history: out.history,
                    },
                ))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `‖Aᵀλ*‖ / ‖Aᵀd‖`, the relative residual of the normal equations.
    pub residual_norm: f64,
    pub telemetry: Telemetry,
    n_points: usize,
    solver: Arc<NormalSolver>,
}

impl SolveResult {
    /// Grid-shaped slice of `z*` for the `m`-th multi-index.
    pub fn field(&self, m: usize) -> &[f64] {
        &self.z[m * self.n_points..(m + 1) * self.n_points]
    }

    pub fn path(&self) -> UsedPath {
        self.solver.path()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackwardResult {
    pub d_z: Vec<f64>,
    pub d_lambda: Vec<f64>,
    /// Aligned with `A.values()`.
    pub grad_a: Vec<f64>,
    pub grad_d: Vec<f64>,
    pub telemetry: Telemetry,
}

/// Gradients with respect to the assembled fields, in [`FieldSet`](crate::assembly::FieldSet) layout.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGradients {
    pub coeff: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub bnd: Vec<f64>,
}

fn forward_with(a: &CsrMatrix, d: &[f64], n_points: usize, solver: NormalSolver) -> Result<SolveResult> {
    let rhs = a.spmv_transpose(d)?;
    let rhs_norm = norm2(&rhs);
    let (z, telemetry) = if rhs_norm == 0.0 {
        (
            vec![0.0; a.n_cols()],
            Telemetry {
                path: solver.path(),
                iterations: 0,
                history: Vec::new(),
            },
        )
    } else {
        solver.solve(&rhs, false)?
    };
    let az = a.spmv(&z)?;
    let lambda: Vec<f64> = d.iter().zip(&az).map(|(d, a)| d - a).collect();
    let residual_norm = if rhs_norm == 0.0 {
        0.0
    } else {
        norm2(&a.spmv_transpose(&lambda)?) / rhs_norm
    };
    Ok(SolveResult {
        z,
        lambda,
        residual_norm,
        telemetry,
        n_points,
        solver: Arc::new(solver),
    })
}

fn choose_path(n_v: usize, cfg: &SolverConfig) -> UsedPath {
    match cfg.path {
        SolverPath::Direct => UsedPath::Dense,
        SolverPath::Iterative => UsedPath::Iterative,
        SolverPath::Auto if n_v <= cfg.dense_threshold => UsedPath::Dense,
        SolverPath::Auto => UsedPath::Iterative,
    }
}

/// Forward solve of an assembled PDE system.
pub fn solve_forward(sys: &LinearSystem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.fgmres.validate()?;
    let normal = sys.a.ata()?;
    let solver = match choose_path(sys.n_v(), cfg) {
        UsedPath::Dense => NormalSolver::Direct {
            chol: SkylineCholesky::factor(&normal)?,
            normal,
        },
        UsedPath::Iterative => NormalSolver::Iterative {
            hierarchy: GridHierarchy::from_normal(sys, normal, cfg.multigrid)?,
            fgmres: cfg.fgmres,
            backward_tol: cfg.backward_tol.unwrap_or(cfg.fgmres.tol),
        },
    };
    forward_with(&sys.a, &sys.d, sys.maps.n_points(), solver)
}

/// Forward solve of a general least-squares system on the direct path.
pub fn solve_forward_matrix(a: &CsrMatrix, d: &[f64]) -> Result<SolveResult> {
    if d.len() != a.n_rows() {
        return Err(Error::Shape("rhs length does not match A".into()));
    }
    let normal = a.ata()?;
    let chol = SkylineCholesky::factor(&normal)?;
    forward_with(a, d, a.n_cols(), NormalSolver::Direct { normal, chol })
}

/// Backward pass for an upstream gradient `g_z = ∂l/∂z*`.
pub fn solve_backward_matrix(a: &CsrMatrix, fwd: &SolveResult, g_z: &[f64]) -> Result<BackwardResult> {
    if g_z.len() != a.n_cols() || fwd.z.len() != a.n_cols() || fwd.lambda.len() != a.n_rows() {
        return Err(Error::Shape(format!(
            "g_z has {} entries for {} variables",
            g_z.len(),
            a.n_cols()
        )));
    }
    let (d_z, telemetry) = if g_z.iter().all(|&g| g == 0.0) {
        (
            vec![0.0; a.n_cols()],
            Telemetry {
                path: fwd.path(),
                iterations: 0,
                history: Vec::new(),
            },
        )
    } else {
        fwd.solver.solve(g_z, true)?
    };
    let d_lambda: Vec<f64> = a.spmv(&d_z)?.into_iter().map(|v| -v).collect();
    let mut grad_a = vec![0.0; a.nnz()];
    for r in 0..a.n_rows() {
        let (dl, lam) = (d_lambda[r], fwd.lambda[r]);
        for k in a.row_ptr()[r]..a.row_ptr()[r + 1] {
            let c = a.col_idx()[k];
            grad_a[k] = dl * fwd.z[c] + lam * d_z[c];
        }
    }
    let grad_d = d_lambda.iter().map(|v| -v).collect();
    Ok(BackwardResult {
        d_z,
        d_lambda,
        grad_a,
        grad_d,
        telemetry,
    })
}

pub fn solve_backward(sys: &LinearSystem, fwd: &SolveResult, g_z: &[f64]) -> Result<BackwardResult> {
    solve_backward_matrix(&sys.a, fwd, g_z)
}

/// Chains `∂A`, `∂d` through the assembly layout: equation entries are
/// `w_eq·c`, equation rhs `w_eq·b`, boundary rhs `w_bnd·ω`.
pub fn field_gradients(sys: &LinearSystem, bwd: &BackwardResult) -> FieldGradients {
    let n = sys.maps.n_points();
    let we = sys.weights.equation;
    let wb = sys.weights.boundary;
    let coeff = (0..sys.mset.len())
        .map(|m| (0..n).map(|p| bwd.grad_a[sys.equation_entry(m, p)] * we).collect())
        .collect();
    let rhs = (0..n).map(|p| bwd.grad_d[sys.maps.eq_row(p)] * we).collect();
    let bnd = sys
        .maps
        .boundary()
        .iter()
        .map(|&p| bwd.grad_d[sys.maps.bnd_row(p).expect("boundary point has a row")] * wb)
        .collect();
    FieldGradients { coeff, rhs, bnd }
}

/// Forward solves for a batch of independent systems in parallel.
pub fn solve_forward_batch(systems: &[LinearSystem], cfg: &SolverConfig) -> Vec<Result<SolveResult>> {
    systems.par_iter().map(|s| solve_forward(s, cfg)).collect()
}
