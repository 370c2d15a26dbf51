//! Preconditioned conjugate gradients on `(2 lambda A + rho I) x = b`.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LassError, Result};
use crate::graph::GraphLaplacian;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgConfig {
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    pub preconditioner: Preconditioner,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            max_iterations: 1000,
            residual_tolerance: 1e-9,
            preconditioner: Preconditioner::Diagonal,
        }
    }
}

impl CgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tolerance > 0.0) {
            return Err(LassError::invalid("cg residual tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Array2<f64>,
    pub columns: Vec<ColumnReport>,
}

impl CgOutcome {
    pub fn all_converged(&self) -> bool {
        self.columns.iter().all(|c| c.converged)
    }
}

/// The operator `2 lambda A + rho I` applied matrix-free.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedOperator<'a> {
    pub a: &'a CsrMatrix,
    pub lambda: f64,
    pub rho: f64,
}

impl ShiftedOperator<'_> {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.a.mul_vec_into(x, y);
        let s = 2.0 * self.lambda;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = s * *yi + self.rho * xi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.a
            .diagonal()
            .into_iter()
            .map(|d| 2.0 * self.lambda * d + self.rho)
            .collect()
    }
}

pub fn cg_solve(
    l: &GraphLaplacian,
    lambda: f64,
    rho: f64,
    b: ArrayView2<'_, f64>,
    warm_start: Option<ArrayView2<'_, f64>>,
    cfg: &CgConfig,
) -> Result<CgOutcome> {
    cg_solve_operator(ShiftedOperator { a: l.matrix(), lambda, rho }, b, warm_start, cfg)
}

pub fn cg_solve_operator(
    op: ShiftedOperator<'_>,
    b: ArrayView2<'_, f64>,
    warm_start: Option<ArrayView2<'_, f64>>,
    cfg: &CgConfig,
) -> Result<CgOutcome> {
    cfg.validate()?;
    if !(op.rho > 0.0) || op.lambda < 0.0 {
        return Err(LassError::invalid("cg needs rho > 0 and lambda >= 0"));
    }
    let n = op.a.nrows();
    if b.nrows() != n {
        return Err(LassError::dims(format!("right-hand side has {} rows, operator has {n}", b.nrows())));
    }
    if let Some(w) = warm_start {
        if w.dim() != b.dim() {
            return Err(LassError::dims("warm start shape differs from the right-hand side"));
        }
    }
    let inv_diag: Option<Vec<f64>> = match cfg.preconditioner {
        Preconditioner::None => None,
        Preconditioner::Diagonal => Some(op.diagonal().into_iter().map(|d| 1.0 / d).collect()),
    };

    let k = b.ncols();
    let results: Vec<(Vec<f64>, ColumnReport)> = (0..k)
        .into_par_iter()
        .map(|c| {
            let rhs: Vec<f64> = b.column(c).to_vec();
            let x0: Vec<f64> = match warm_start {
                Some(w) => w.column(c).to_vec(),
                None => vec![0.0; n],
            };
            cg_column(op, &rhs, x0, inv_diag.as_deref(), cfg)
        })
        .collect();

    let mut x = Array2::zeros((n, k));
    let mut columns = Vec::with_capacity(k);
    for (c, (col, report)) in results.into_iter().enumerate() {
        x.index_axis_mut(Axis(1), c).assign(&ndarray::ArrayView1::from(&col));
        columns.push(report);
    }
    Ok(CgOutcome { x, columns })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cg_column(
    op: ShiftedOperator<'_>,
    b: &[f64],
    mut x: Vec<f64>,
    inv_diag: Option<&[f64]>,
    cfg: &CgConfig,
) -> (Vec<f64>, ColumnReport) {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return (
            vec![0.0; n],
            ColumnReport { iterations: 0, relative_residual: 0.0, converged: true },
        );
    }
    let mut ax = vec![0.0; n];
    op.apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r.iter().zip(d)).for_each(|(zi, (ri, di))| *zi = ri * di),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut rel = dot(&r, &r).sqrt() / b_norm;
    let mut iterations = 0;
    while rel > cfg.residual_tolerance && iterations < cfg.max_iterations {
        op.apply(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        iterations += 1;
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel <= cfg.residual_tolerance {
            break;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let converged = rel <= cfg.residual_tolerance;
    (x, ColumnReport { iterations, relative_residual: rel, converged })
}
