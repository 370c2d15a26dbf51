//! The Laplacian assignment problem
//!
//! ```text
//! min_Z  lambda tr(Z^T L Z) - tr(G^T Z)   s.t.  Z 1 = 1,  Z >= 0
//! ```
//!
//! and its ADMM solver.

mod admm;
mod closed;
mod kkt;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{LassError, Result};
use crate::graph::GraphLaplacian;
use crate::sparse::CsrMatrix;

pub use admm::{rho_star, solve, AdmmSolver, RunOutcome, SolverState};
pub use closed::{closed_form_lambda0, lp_lambda_inf, uniqueness_certificate, ArgmaxAssignment, TieFlag, Uniqueness};
pub use kkt::{kkt_residuals, recover_multipliers, KktReport};

/// A LASS instance. The quadratic term is
/// `lambda tr(Z^T (L + diag(anchor)) Z) + ridge_epsilon ||Z||_F^2`.
#[derive(Debug, Clone)]
pub struct Problem {
    laplacian: GraphLaplacian,
    g: Array2<f64>,
    lambda: f64,
    ridge_epsilon: f64,
    anchor: Option<Vec<f64>>,
}

impl Problem {
    /// Affinities must lie in [-1, 1].
    pub fn new(laplacian: GraphLaplacian, g: Array2<f64>, lambda: f64) -> Result<Self> {
        if let Some(((n, k), v)) = g.indexed_iter().find(|(_, v)| !(v.abs() <= 1.0)) {
            return Err(LassError::invalid(format!("affinity g[{n}][{k}] = {v} is outside [-1, 1]")));
        }
        Self::with_linear_term(laplacian, g, lambda)
    }

    /// Like [`Problem::new`] but accepts any finite linear term.
    pub fn with_linear_term(laplacian: GraphLaplacian, g: Array2<f64>, lambda: f64) -> Result<Self> {
        if laplacian.is_normalized() {
            return Err(LassError::invalid("LASS needs the unnormalized Laplacian"));
        }
        if g.nrows() != laplacian.n() {
            return Err(LassError::dims(format!(
                "affinity matrix has {} rows, graph has {} items",
                g.nrows(),
                laplacian.n()
            )));
        }
        if g.ncols() == 0 {
            return Err(LassError::invalid("at least one category is required"));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(LassError::invalid("affinities must be finite"));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(LassError::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Problem { laplacian, g, lambda, ridge_epsilon: 0.0, anchor: None })
    }

    pub fn with_ridge(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(LassError::invalid(format!("ridge epsilon must be finite and >= 0, got {epsilon}")));
        }
        self.ridge_epsilon = epsilon;
        Ok(self)
    }

    /// Adds `diag(anchor)` to the Laplacian in the quadratic term.
    pub fn with_anchor(mut self, anchor: Vec<f64>) -> Result<Self> {
        if anchor.len() != self.n() {
            return Err(LassError::dims("anchor length differs from item count"));
        }
        if anchor.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(LassError::invalid("anchor weights must be finite and >= 0"));
        }
        self.anchor = if anchor.iter().all(|&a| a == 0.0) { None } else { Some(anchor) };
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn k(&self) -> usize {
        self.g.ncols()
    }

    pub fn laplacian(&self) -> &GraphLaplacian {
        &self.laplacian
    }

    pub fn g(&self) -> ArrayView2<'_, f64> {
        self.g.view()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn ridge_epsilon(&self) -> f64 {
        self.ridge_epsilon
    }

    pub fn anchor(&self) -> Option<&[f64]> {
        self.anchor.as_deref()
    }

    /// `L + diag(anchor)`.
    pub fn operator(&self) -> CsrMatrix {
        match &self.anchor {
            Some(a) => self.laplacian.matrix().scale_add_diagonal(1.0, 1.0, a),
            None => self.laplacian.matrix().clone(),
        }
    }

    /// Sub-problem on `items`, which should be a union of connected components.
    pub fn restrict(&self, items: &[usize]) -> Problem {
        let g = self.g.select(ndarray::Axis(0), items);
        let anchor = self.anchor.as_ref().map(|a| items.iter().map(|&i| a[i]).collect());
        Problem {
            laplacian: self.laplacian.restrict(items),
            g,
            lambda: self.lambda,
            ridge_epsilon: self.ridge_epsilon,
            anchor,
        }
    }

    fn check_shape(&self, z: ArrayView2<'_, f64>) -> Result<()> {
        if z.dim() != self.g.dim() {
            return Err(LassError::dims(format!(
                "assignment matrix is {:?}, problem is {:?}",
                z.dim(),
                self.g.dim()
            )));
        }
        Ok(())
    }

    /// `H Z` for the Hessian-like operator `H = 2 lambda (L + diag(anchor)) + 2 epsilon I`.
    fn apply_hessian(&self, z: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut hz = self.laplacian.matrix().mul_dense(z) * (2.0 * self.lambda);
        if let Some(a) = &self.anchor {
            for (mut row, (&ai, zrow)) in hz.rows_mut().into_iter().zip(a.iter().zip(z.rows())) {
                row.scaled_add(2.0 * self.lambda * ai, &zrow);
            }
        }
        if self.ridge_epsilon > 0.0 {
            hz.scaled_add(2.0 * self.ridge_epsilon, &z);
        }
        hz
    }

    /// `lambda tr(Z^T L Z) - tr(G^T Z)` plus the anchor and ridge terms.
    pub fn objective(&self, z: ArrayView2<'_, f64>) -> Result<f64> {
        self.check_shape(z)?;
        let hz = self.apply_hessian(z);
        let quad: f64 = hz.iter().zip(z.iter()).map(|(a, b)| a * b).sum::<f64>() / 2.0;
        let lin: f64 = self.g.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        Ok(quad - lin)
    }

    /// `2 lambda L Z - G` plus the anchor and ridge terms.
    pub fn gradient(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_shape(z)?;
        Ok(self.apply_hessian(z) - &self.g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoPolicy {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Cholesky,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho: RhoPolicy,
    pub tol: f64,
    pub check_interval: usize,
    pub max_iterations: usize,
    pub backend: Backend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: RhoPolicy::Auto,
            tol: 1e-5,
            check_interval: 50,
            max_iterations: 100_000,
            backend: Backend::Cholesky,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(LassError::invalid("tol must be positive"));
        }
        if self.check_interval == 0 {
            return Err(LassError::invalid("check interval must be at least 1"));
        }
        if let RhoPolicy::Value(r) = self.rho {
            if !(r > 0.0) || !r.is_finite() {
                return Err(LassError::invalid(format!("rho must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoSource {
    Given,
    Estimated { sigma_min: f64, sigma_max: f64 },
    Fallback { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub size: usize,
    pub rho: Option<f64>,
    pub rho_source: Option<RhoSource>,
    pub backend: Option<Backend>,
    pub iterations: usize,
    pub converged: bool,
    pub last_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedFormLambda0,
    RidgeProjection,
    Admm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: SolveMethod,
    pub objective: f64,
    pub raw_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt: KktReport,
    pub ties: Vec<TieFlag>,
    pub uniqueness: Uniqueness,
    pub components: Vec<ComponentReport>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Row-wise feasible assignments.
    pub z: Array2<f64>,
    pub pi: Array1<f64>,
    pub m: Array2<f64>,
    /// Final ADMM auxiliaries `(Y, U)`, usable as a warm start.
    pub warm: Option<(Array2<f64>, Array2<f64>)>,
    pub diagnostics: Diagnostics,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, SparseSimilarity};
    use ndarray::array;

    fn edge() -> GraphLaplacian {
        laplacian(&SparseSimilarity::from_edges(2, vec![(0, 1, 1.0)]).unwrap(), false)
    }

    #[test]
    fn objective_two_nodes() {
        let p = Problem::new(edge(), Array2::zeros((2, 2)), 1.0).unwrap();
        assert_eq!(p.objective(array![[1.0, 0.0], [0.0, 1.0]].view()).unwrap(), 2.0);
        assert_eq!(p.objective(Array2::zeros((2, 2)).view()).unwrap(), 0.0);
    }

    #[test]
    fn constant_rows_only_see_the_linear_term() {
        let g = array![[0.5, -0.2, 0.1], [0.3, 0.4, -1.0]];
        let p = Problem::new(edge(), g.clone(), 3.0).unwrap();
        let s = [0.2, 0.5, 0.3];
        let z = array![[0.2, 0.5, 0.3], [0.2, 0.5, 0.3]];
        let colsum = g.sum_axis(ndarray::Axis(0));
        let want = -(0..3).map(|k| colsum[k] * s[k]).sum::<f64>();
        assert!((p.objective(z.view()).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Problem::new(edge(), array![[2.0], [0.0]], 1.0).is_err());
        assert!(Problem::new(edge(), Array2::zeros((3, 2)), 1.0).is_err());
        assert!(Problem::new(edge(), Array2::zeros((2, 2)), -1.0).is_err());
        assert!(Problem::new(edge(), Array2::zeros((2, 0)), 1.0).is_err());
        let p = Problem::new(edge(), Array2::zeros((2, 2)), 1.0).unwrap();
        assert!(p.clone().with_ridge(-1.0).is_err());
        assert!(p.with_anchor(vec![1.0]).is_err());
    }

    #[test]
    fn ridge_and_anchor_terms() {
        let p = Problem::new(edge(), Array2::zeros((2, 1)), 0.5)
            .unwrap()
            .with_ridge(0.25)
            .unwrap()
            .with_anchor(vec![2.0, 0.0])
            .unwrap();
        let z = array![[1.0], [1.0]];
        // lambda * (0 + 2 * 1) + 0.25 * 2
        assert!((p.objective(z.view()).unwrap() - 1.5).abs() < 1e-15);
        let grad = p.gradient(z.view()).unwrap();
        assert_eq!(grad, array![[2.5], [0.5]]);
    }
}
