use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::Problem;
use crate::error::{LassError, Result};

/// Max-norm KKT residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity: f64,
    pub equality: f64,
    pub nonnegativity: f64,
    pub multiplier_sign: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        [self.stationarity, self.equality, self.nonnegativity, self.multiplier_sign, self.complementarity]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn kkt_residuals(
    p: &Problem,
    z: ArrayView2<'_, f64>,
    pi: ArrayView1<'_, f64>,
    m: ArrayView2<'_, f64>,
) -> Result<KktReport> {
    if pi.len() != p.n() || m.dim() != z.dim() {
        return Err(LassError::dims("multiplier shapes differ from the problem"));
    }
    let grad = p.gradient(z)?;
    Ok(kkt_from_gradient(grad.view(), z, pi, m))
}

pub(crate) fn kkt_from_gradient(
    grad: ArrayView2<'_, f64>,
    z: ArrayView2<'_, f64>,
    pi: ArrayView1<'_, f64>,
    m: ArrayView2<'_, f64>,
) -> KktReport {
    let mut r = KktReport {
        stationarity: 0.0,
        equality: 0.0,
        nonnegativity: 0.0,
        multiplier_sign: 0.0,
        complementarity: 0.0,
    };
    for n in 0..z.nrows() {
        let mut sum = 0.0;
        for k in 0..z.ncols() {
            let (zk, mk) = (z[[n, k]], m[[n, k]]);
            sum += zk;
            r.stationarity = r.stationarity.max((grad[[n, k]] - pi[n] - mk).abs());
            r.nonnegativity = r.nonnegativity.max(-zk);
            r.multiplier_sign = r.multiplier_sign.max(-mk);
            r.complementarity = r.complementarity.max((mk * zk).abs());
        }
        r.equality = r.equality.max((sum - 1.0).abs());
    }
    r
}

/// Rows must lie on the simplex to within this tolerance.
const FEASIBILITY_TOL: f64 = 1e-8;

/// Multipliers `(pi, M)` consistent with a feasible `Z`.
///
/// With `S = grad(Z)` each row satisfies `s = pi 1 + mu`, `mu o z = 0`.
/// Centering `q = s - mean(s) 1` and solving the regularized system with
/// `Psi = diag(z)^2 + I` gives
/// `mu = Psi^-1 q - ((1^T q - 1^T Psi^-1 q) / (K - 1^T Psi^-1 1)) Psi^-1 1`,
/// and `pi = (1^T s - 1^T mu) / K`.
pub fn recover_multipliers(p: &Problem, z: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    check_feasible(z)?;
    let s = p.gradient(z)?;
    Ok(multipliers_from_gradient(s.view(), z))
}

pub(crate) fn check_feasible(z: ArrayView2<'_, f64>) -> Result<()> {
    for (n, row) in z.axis_iter(Axis(0)).enumerate() {
        let sum: f64 = row.sum();
        if (sum - 1.0).abs() > FEASIBILITY_TOL {
            return Err(LassError::Infeasible { row: n, reason: format!("row sums to {sum}") });
        }
        if let Some(v) = row.iter().find(|v| !(**v >= -FEASIBILITY_TOL)) {
            return Err(LassError::Infeasible { row: n, reason: format!("negative entry {v}") });
        }
    }
    Ok(())
}

pub(crate) fn multipliers_from_gradient(s: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let (n, k) = z.dim();
    let kf = k as f64;
    let mut pi = Array1::zeros(n);
    let mut m = Array2::zeros((n, k));
    for i in 0..n {
        let srow = s.row(i);
        let zrow = z.row(i);
        let mean = srow.sum() / kf;
        let q: Vec<f64> = srow.iter().map(|v| v - mean).collect();
        let psi_inv: Vec<f64> = zrow.iter().map(|zk| 1.0 / (zk * zk + 1.0)).collect();
        let psi_q: Vec<f64> = q.iter().zip(&psi_inv).map(|(a, b)| a * b).collect();
        let sum_q: f64 = q.iter().sum();
        let sum_psi_q: f64 = psi_q.iter().sum();
        let sum_psi: f64 = psi_inv.iter().sum();
        let coef = (sum_q - sum_psi_q) / (kf - sum_psi);
        let mut mu_sum = 0.0;
        for c in 0..k {
            let mu = psi_q[c] - coef * psi_inv[c];
            m[[i, c]] = mu;
            mu_sum += mu;
        }
        pi[i] = (srow.sum() - mu_sum) / kf;
    }
    (pi, m)
}
