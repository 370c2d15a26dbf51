//! Extreme eigenvalues of graph Laplacians and related symmetric operators.
//!
//! Both ends of the spectrum come from Lanczos with full reorthogonalization.
//! The smallest nonzero eigenvalue is found through shift-invert on
//! `(A + delta I)^-1`, so slow spectral gaps do not stall the iteration.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LassError, Result};
use crate::graph::GraphLaplacian;
use crate::linsolve::SparseCholesky;
use crate::sparse::CsrMatrix;

const MAX_LANCZOS_STEPS: usize = 400;
const START_SEED: u64 = 0x5eed_1a2c;

/// `(sigma_min_nonzero, sigma_max)` of a connected graph Laplacian.
pub fn extreme_eigenvalues(l: &GraphLaplacian, tol: f64) -> Result<(f64, f64)> {
    let n = l.n();
    if n < 2 {
        return Err(LassError::invalid("a graph with fewer than 2 items has no nonzero eigenvalue"));
    }
    let null: Vec<f64> = if l.is_normalized() {
        let s: Vec<f64> = l.degrees().iter().map(|d| d.sqrt()).collect();
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        s.into_iter().map(|x| x / norm).collect()
    } else {
        vec![1.0 / (n as f64).sqrt(); n]
    };
    operator_extreme_eigenvalues(l.matrix(), Some(&null), tol)
}

/// Extreme eigenvalues of a symmetric positive semidefinite matrix on the
/// orthogonal complement of `null_vector` (unit norm) when one is given.
pub fn operator_extreme_eigenvalues(a: &CsrMatrix, null_vector: Option<&[f64]>, tol: f64) -> Result<(f64, f64)> {
    let n = a.nrows();
    if !(tol > 0.0) {
        return Err(LassError::invalid("eigenvalue tolerance must be positive"));
    }
    if let Some(u) = null_vector {
        if u.len() != n {
            return Err(LassError::dims("null vector length differs from the operator"));
        }
    }
    let dim = n - usize::from(null_vector.is_some());
    if dim == 0 {
        return Err(LassError::invalid("operator has no eigenvalue off the null space"));
    }

    let top = lanczos_largest(n, dim, |x, y| a.mul_vec_into(x, y), null_vector, tol);
    let sigma_max = top.value;

    let mean_diag = a.diagonal().iter().sum::<f64>() / n as f64;
    let delta = 1e-8 * mean_diag.max(f64::MIN_POSITIVE);
    let shifted = a.scale_add_diagonal(1.0, delta, &vec![1.0; n]);
    let bottom = match SparseCholesky::factorize(&shifted) {
        Ok(chol) => {
            let inv = lanczos_largest(
                n,
                dim,
                |x, y| {
                    y.copy_from_slice(x);
                    chol.solve_in_place(y);
                },
                null_vector,
                tol,
            );
            Estimate { value: 1.0 / inv.value - delta, ..inv }
        }
        Err(err) => {
            log::warn!("shift-invert factorization failed ({err}); using spectral shift");
            let flipped = lanczos_largest(
                n,
                dim,
                |x, y| {
                    a.mul_vec_into(x, y);
                    for (yi, xi) in y.iter_mut().zip(x) {
                        *yi = sigma_max * xi - *yi;
                    }
                },
                null_vector,
                tol,
            );
            Estimate { value: sigma_max - flipped.value, ..flipped }
        }
    };
    let sigma_min = bottom.value;

    if !(top.converged && bottom.converged) {
        return Err(LassError::EigenNotConverged {
            iterations: top.steps.max(bottom.steps),
            sigma_min,
            sigma_max,
        });
    }
    Ok((sigma_min, sigma_max))
}

#[derive(Debug, Clone, Copy)]
struct Estimate {
    value: f64,
    steps: usize,
    converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Largest eigenvalue of the operator restricted to the complement of `null`.
fn lanczos_largest(
    n: usize,
    dim: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    null: Option<&[f64]>,
    tol: f64,
) -> Estimate {
    let deflate = |v: &mut [f64]| {
        if let Some(u) = null {
            let c = dot(u, v);
            axpy(-c, u, v);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    deflate(&mut v);
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let max_steps = dim.min(MAX_LANCZOS_STEPS);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut alphas = Vec::with_capacity(max_steps);
    let mut betas: Vec<f64> = Vec::with_capacity(max_steps);
    let mut w = vec![0.0; n];
    let mut best = Estimate { value: 0.0, steps: 0, converged: false };

    for j in 0..max_steps {
        apply(&v, &mut w);
        deflate(&mut w);
        let alpha = dot(&v, &w);
        axpy(-alpha, &v, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), betas.last()) {
            axpy(-b, prev, &mut w);
        }
        basis.push(std::mem::take(&mut v));
        alphas.push(alpha);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
            deflate(&mut w);
        }
        let beta = dot(&w, &w).sqrt();

        let steps = j + 1;
        let last = steps == max_steps;
        let check = steps <= 20 || steps % 10 == 0 || last;
        if check {
            let (theta, s_last) = top_ritz_pair(&alphas, &betas);
            best = Estimate { value: theta, steps, converged: false };
            let scale = theta.abs().max(f64::MIN_POSITIVE);
            if beta * s_last.abs() <= tol * scale || beta <= 1e-14 * scale || steps == dim {
                best.converged = true;
                return best;
            }
        }
        if last {
            break;
        }
        betas.push(beta);
        v = w.iter().map(|x| x / beta).collect();
    }
    best
}

/// Largest eigenvalue of the Lanczos tridiagonal and the last component of its eigenvector.
fn top_ritz_pair(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty tridiagonal");
    (theta, eig.eigenvectors[(m - 1, idx)])
}
