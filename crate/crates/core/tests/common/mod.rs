//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use lasskit_core::graph::{laplacian, GraphLaplacian, SparseSimilarity};
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus extra edges with probability `p`; weights in (0.1, 1].
pub fn random_connected_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> SparseSimilarity {
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.push((i, j, rng.random_range(0.1..=1.0)));
    }
    for i in 0..n {
        for j in 0..i {
            if !edges.iter().any(|&(a, b, _)| (a, b) == (i, j)) && rng.random_bool(p) {
                edges.push((i, j, rng.random_range(0.1..=1.0)));
            }
        }
    }
    SparseSimilarity::from_edges(n, edges).unwrap()
}

pub fn random_g(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..=1.0))
}

pub fn dense_laplacian(w: &SparseSimilarity) -> DMatrix<f64> {
    let n = w.n();
    let mut l = DMatrix::zeros(n, n);
    for (i, j, v) in w.edges() {
        if i != j {
            l[(i, j)] -= v;
            l[(j, i)] -= v;
            l[(i, i)] += v;
            l[(j, j)] += v;
        }
    }
    l
}

pub fn unnormalized(w: &SparseSimilarity) -> GraphLaplacian {
    laplacian(w, false)
}

/// Euclidean projection onto the simplex by enumerating supports and
/// keeping the one that satisfies the optimality conditions.
pub fn simplex_by_enumeration(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|&j| mask & (1 << j) != 0).collect();
        let theta = (support.iter().map(|&j| v[j]).sum::<f64>() - 1.0) / support.len() as f64;
        let x: Vec<f64> = (0..k).map(|j| if mask & (1 << j) != 0 { v[j] - theta } else { 0.0 }).collect();
        if x.iter().any(|&xi| xi < -1e-12) {
            continue;
        }
        let dist: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, x));
        }
    }
    best.unwrap().1
}

/// Solution of `min lambda tr(Z^T L Z) - tr(G^T Z)` over row-stochastic `Z`.
pub struct OracleSolution {
    pub z: DMatrix<f64>,
    pub objective: f64,
}

pub fn lass_objective(l: &DMatrix<f64>, g: &DMatrix<f64>, lambda: f64, z: &DMatrix<f64>) -> f64 {
    lambda * (z.transpose() * l * z).trace() - (g.transpose() * z).trace()
}

/// Projected accelerated gradient for a good starting point, then exact
/// equality-constrained solves over candidate active sets; a candidate is
/// accepted once it satisfies the KKT conditions.
pub fn lass_oracle(l: &DMatrix<f64>, g: &DMatrix<f64>, lambda: f64) -> OracleSolution {
    let (n, k) = (g.nrows(), g.ncols());
    let sigma_max = l.clone().symmetric_eigen().eigenvalues.max().max(1e-12);
    let step = 1.0 / (2.0 * lambda * sigma_max);
    let project = |z: &mut DMatrix<f64>| {
        for r in 0..n {
            let row: Vec<f64> = z.row(r).iter().copied().collect();
            let p = simplex_by_enumeration(&row);
            for c in 0..k {
                z[(r, c)] = p[c];
            }
        }
    };
    let mut z = DMatrix::from_element(n, k, 1.0 / k as f64);
    let mut y = z.clone();
    let mut t = 1.0f64;
    for _ in 0..40_000 {
        let grad = 2.0 * lambda * (l * &y) - g;
        let mut next = &y - step * grad;
        project(&mut next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &next + (t - 1.0) / t_next * (&next - &z);
        z = next;
        t = t_next;
    }

    let idx = |r: usize, c: usize| r * k + c;
    let mut values: Vec<(f64, usize)> = (0..n * k).map(|i| (z[(i / k, i % k)], i)).collect();
    values.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Thresholded active sets first, then subsets of the ambiguous entries.
    let mut candidates: Vec<Vec<bool>> = Vec::new();
    for tau in [1e-12, 1e-9, 1e-7, 1e-5, 1e-4, 1e-3] {
        candidates.push((0..n * k).map(|i| z[(i / k, i % k)] <= tau).collect());
    }
    let ambiguous: Vec<usize> =
        values.iter().filter(|(v, _)| *v > 1e-12 && *v <= 1e-2).map(|&(_, i)| i).take(14).collect();
    for mask in 0u32..(1 << ambiguous.len()) {
        let mut active: Vec<bool> = (0..n * k).map(|i| z[(i / k, i % k)] <= 1e-12).collect();
        for (b, &i) in ambiguous.iter().enumerate() {
            active[i] = mask & (1 << b) != 0;
        }
        candidates.push(active);
    }

    let zhat: Vec<f64> = (0..n * k).map(|i| z[(i / k, i % k)]).collect();
    let scale = 1.0 + 2.0 * lambda * sigma_max + g.amax();
    for active in candidates {
        if let Some(x) = solve_active_set(l, g, lambda, &active, &zhat, scale) {
            let zs = DMatrix::from_fn(n, k, |r, c| x[idx(r, c)].max(0.0));
            let objective = lass_objective(l, g, lambda, &zs);
            return OracleSolution { z: zs, objective };
        }
    }
    panic!("oracle found no KKT point");
}

fn solve_active_set(
    l: &DMatrix<f64>,
    g: &DMatrix<f64>,
    lambda: f64,
    active: &[bool],
    start: &[f64],
    scale: f64,
) -> Option<Vec<f64>> {
    let (n, k) = (g.nrows(), g.ncols());
    let free: Vec<usize> = (0..n * k).filter(|&i| !active[i]).collect();
    if (0..n).any(|r| (0..k).all(|c| active[r * k + c])) {
        return None;
    }
    let hess = |a: usize, b: usize| {
        if a % k == b % k {
            2.0 * lambda * l[(a / k, b / k)]
        } else {
            0.0
        }
    };
    let f = free.len();
    let m = f + n;
    // [H_FF  -E^T; E  0] [x; pi] = [g; 1], solved for the correction from `start`.
    let mut kkt = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            kkt[(a, b)] = hess(i, j);
        }
        kkt[(a, f + i / k)] = -1.0;
        kkt[(f + i / k, a)] = 1.0;
        rhs[a] = g[(i / k, i % k)];
    }
    for r in 0..n {
        rhs[f + r] = 1.0;
    }
    let x0 = DVector::from_iterator(m, free.iter().map(|&i| start[i]).chain(std::iter::repeat_n(0.0, n)));
    let resid = &rhs - &kkt * &x0;
    let svd = kkt.clone().svd(true, true);
    let delta = svd.solve(&resid, 1e-10 * scale).ok()?;
    let sol = x0 + delta;
    if (&kkt * &sol - &rhs).amax() > 1e-9 * scale {
        return None;
    }
    let mut x = vec![0.0; n * k];
    for (a, &i) in free.iter().enumerate() {
        x[i] = sol[a];
    }
    let tol = 1e-9 * scale;
    if x.iter().any(|&v| v < -tol) {
        return None;
    }
    for i in (0..n * k).filter(|&i| active[i]) {
        let grad: f64 = (0..n * k).map(|j| hess(i, j) * x[j]).sum::<f64>() - g[(i / k, i % k)];
        let mu = grad - sol[f + i / k];
        if mu < -tol {
            return None;
        }
    }
    Some(x)
}

pub fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[[r, c]])
}
