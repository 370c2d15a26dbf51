//! Linear solves with the shifted matrix `2 lambda L + rho I` that dominate
//! the ADMM Z-update.
//!
//! The direct path caches a fill-reduced sparse Cholesky factor that is
//! reused across iterations and right-hand sides; [`cg`] provides a
//! matrix-free fallback when the factor would be too dense.

pub mod cg;
pub mod cholesky;
pub mod ordering;

use ndarray::{Array2, ArrayView2};

use crate::error::{LassError, Result};
use crate::graph::GraphLaplacian;
use crate::sparse::CsrMatrix;

pub use cg::{cg_solve, cg_solve_operator, CgConfig, CgOutcome, ColumnReport, Preconditioner, ShiftedOperator};
pub use cholesky::SparseCholesky;

/// Fill ratio above which [`ShiftedFactor::factorize`] refuses to build a factor.
pub const DEFAULT_FILL_CAP: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct ShiftedFactor {
    lambda: f64,
    rho: f64,
    chol: SparseCholesky,
}

impl ShiftedFactor {
    pub fn factorize(l: &GraphLaplacian, lambda: f64, rho: f64) -> Result<Self> {
        Self::factorize_operator(l.matrix(), lambda, rho, DEFAULT_FILL_CAP)
    }

    /// Factor of `2 lambda A + rho I` for any symmetric positive semidefinite `A`.
    pub fn factorize_operator(a: &CsrMatrix, lambda: f64, rho: f64, fill_cap: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(rho > 0.0) {
            return Err(LassError::invalid(format!(
                "shifted factor needs lambda > 0 and rho > 0 (lambda = {lambda}, rho = {rho})"
            )));
        }
        let shifted = shifted_matrix(a, lambda, rho);
        let chol = SparseCholesky::factorize(&shifted)?;
        let fill_ratio = chol.fill_ratio();
        if fill_ratio > fill_cap {
            return Err(LassError::FillBudgetExceeded { fill_ratio, cap: fill_cap });
        }
        Ok(ShiftedFactor { lambda, rho, chol })
    }

    pub fn n(&self) -> usize {
        self.chol.n()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn fill_ratio(&self) -> f64 {
        self.chol.fill_ratio()
    }

    pub fn permutation(&self) -> &[usize] {
        self.chol.permutation()
    }

    pub fn cholesky(&self) -> &SparseCholesky {
        &self.chol
    }

    /// Overwrites `x` with the solution for right-hand sides `x`.
    pub fn solve_in_place(&self, x: &mut Array2<f64>) -> Result<()> {
        if x.nrows() != self.n() {
            return Err(LassError::dims(format!(
                "right-hand side has {} rows, factor has {}",
                x.nrows(),
                self.n()
            )));
        }
        let k = x.ncols();
        match x.as_slice_mut() {
            Some(buf) => self.chol.solve_block_in_place(buf, k),
            None => *x = self.solve(x.view())?,
        }
        Ok(())
    }

    /// Solves all columns of `b` against the shared factor.
    pub fn solve(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if b.nrows() != self.n() {
            return Err(LassError::dims(format!(
                "right-hand side has {} rows, factor has {}",
                b.nrows(),
                self.n()
            )));
        }
        let mut x = b.as_standard_layout().into_owned();
        let k = x.ncols();
        self.chol.solve_block_in_place(x.as_slice_mut().expect("standard layout"), k);
        Ok(x)
    }
}

/// `2 lambda A + rho I`, with every diagonal entry stored.
pub fn shifted_matrix(a: &CsrMatrix, lambda: f64, rho: f64) -> CsrMatrix {
    a.scale_add_diagonal(2.0 * lambda, rho, &vec![1.0; a.nrows()])
}
