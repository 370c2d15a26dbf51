//! Item-item similarity graphs, their Laplacians and connected components.

use std::collections::VecDeque;

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LassError, Result};
use crate::sparse::CsrMatrix;

pub use crate::spectrum::{extreme_eigenvalues, operator_extreme_eigenvalues};

/// Symmetric nonnegative item-item similarity matrix `W` with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSimilarity {
    matrix: CsrMatrix,
    symmetric: bool,
}

impl SparseSimilarity {
    /// Validates and wraps a square matrix. Negative weights and stored
    /// self-loops are rejected; explicit zeros are dropped.
    pub fn from_csr(matrix: CsrMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(LassError::dims(format!(
                "similarity matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for (i, j, v) in matrix.triplets() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(LassError::invalid(format!(
                    "similarity ({i}, {j}) = {v} is not a finite nonnegative weight"
                )));
            }
            if i == j && v != 0.0 {
                return Err(LassError::invalid(format!("self-loop stored at item {i}")));
            }
        }
        let n = matrix.nrows();
        let cleaned = CsrMatrix::from_triplets(n, n, matrix.triplets().filter(|&(i, j, v)| i != j && v != 0.0))?;
        let symmetric = cleaned.is_symmetric(0.0);
        Ok(SparseSimilarity {
            matrix: cleaned,
            symmetric,
        })
    }

    /// Builds `W` from undirected edges; each `(i, j, w)` is stored at both
    /// `(i, j)` and `(j, i)`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut triplets = Vec::new();
        for (i, j, w) in edges {
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
        SparseSimilarity::from_csr(CsrMatrix::from_triplets(n, n, triplets)?)
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.matrix.row_sums()
    }

    /// Upper-triangle edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.matrix.triplets().filter(|&(i, j, _)| i < j)
    }

    pub fn num_edges(&self) -> usize {
        self.edges().count()
    }

    /// Restriction of the graph to `items`, reindexed in the given order.
    pub fn subgraph(&self, items: &[usize]) -> SparseSimilarity {
        SparseSimilarity {
            matrix: self.matrix.submatrix(items, items),
            symmetric: self.symmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-(d / sigma)^2)`
    Gaussian { sigma: f64 },
    Binary,
}

impl Kernel {
    fn weight(&self, sq_dist: f64) -> f64 {
        match *self {
            Kernel::Gaussian { sigma } => (-sq_dist / (sigma * sigma)).exp(),
            Kernel::Binary => 1.0,
        }
    }
}

/// Symmetric k-nearest-neighbor graph over the rows of `points`.
///
/// Each item is linked to its `k` nearest other items (ties broken by lower
/// index); the directed kNN matrix is then symmetrized with an elementwise
/// maximum against its transpose.
pub fn build_knn_graph(points: ArrayView2<'_, f64>, k: usize, kernel: Kernel) -> Result<SparseSimilarity> {
    let n = points.nrows();
    if n < 2 {
        return Err(LassError::invalid(format!("need at least 2 points, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(LassError::invalid(format!("k must satisfy 1 <= k < N (k = {k}, N = {n})")));
    }
    if let Kernel::Gaussian { sigma } = kernel {
        if !(sigma > 0.0) {
            return Err(LassError::invalid(format!("gaussian sigma must be positive, got {sigma}")));
        }
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(LassError::invalid("points contain non-finite coordinates"));
    }

    let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = points.index_axis(Axis(0), i);
            let mut dists: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let xj = points.index_axis(Axis(0), j);
                    let d2 = xi.iter().zip(xj.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                    (d2, j)
                })
                .collect();
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            dists.select_nth_unstable_by(k - 1, by_dist);
            dists.truncate(k);
            dists.sort_by(by_dist);
            dists.into_iter().map(|(d2, j)| (j, kernel.weight(d2))).collect()
        })
        .collect();

    let mut triplets = Vec::with_capacity(2 * n * k);
    for (i, nbrs) in neighbors.iter().enumerate() {
        for &(j, w) in nbrs {
            triplets.push((i, j, w));
        }
    }
    let directed = CsrMatrix::from_triplets(n, n, triplets)?;
    let mut sym = Vec::with_capacity(2 * directed.nnz());
    for (i, j, w) in directed.triplets() {
        let w_max = w.max(directed.get(j, i));
        sym.push((i, j, w_max));
        if directed.get(j, i) == 0.0 {
            sym.push((j, i, w_max));
        }
    }
    SparseSimilarity::from_csr(CsrMatrix::from_triplets(n, n, sym)?)
}

/// Graph Laplacian, either `D - W` or `I - D^{-1/2} W D^{-1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphLaplacian {
    matrix: CsrMatrix,
    degrees: Vec<f64>,
    normalized: bool,
}

impl GraphLaplacian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().fold(0.0, |m: f64, &d| m.max(d))
    }

    /// Negated off-diagonal part, which is `W` for the unnormalized form.
    pub fn adjacency(&self) -> CsrMatrix {
        let n = self.n();
        CsrMatrix::from_triplets(
            n,
            n,
            self.matrix.triplets().filter(|&(i, j, _)| i != j).map(|(i, j, v)| (i, j, -v)),
        )
        .expect("indices are in range")
    }

    /// `tr(Z^T L Z)`.
    pub fn quadratic_form(&self, z: ArrayView2<'_, f64>) -> f64 {
        let lz = self.matrix.mul_dense(z);
        (&lz * &z).sum()
    }

    /// Restriction to `items`. For a connected component of the
    /// unnormalized Laplacian this is the component's own Laplacian.
    pub fn restrict(&self, items: &[usize]) -> GraphLaplacian {
        GraphLaplacian {
            matrix: self.matrix.submatrix(items, items),
            degrees: items.iter().map(|&i| self.degrees[i]).collect(),
            normalized: self.normalized,
        }
    }
}

pub fn laplacian(w: &SparseSimilarity, normalized: bool) -> GraphLaplacian {
    let n = w.n();
    let degrees = w.degrees();
    let triplets: Vec<(usize, usize, f64)> = if normalized {
        let inv_sqrt: Vec<f64> = degrees
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        w.matrix()
            .triplets()
            .map(|(i, j, v)| (i, j, -v * inv_sqrt[i] * inv_sqrt[j]))
            .chain((0..n).map(|i| (i, i, 1.0)))
            .collect()
    } else {
        w.matrix()
            .triplets()
            .map(|(i, j, v)| (i, j, -v))
            .chain((0..n).map(|i| (i, i, degrees[i])))
            .collect()
    };
    GraphLaplacian {
        matrix: CsrMatrix::from_triplets(n, n, triplets).expect("indices are in range"),
        degrees,
        normalized,
    }
}

/// Partition of the items into connected components.
///
/// Component ids are 0-based and assigned in order of each component's
/// lowest member index; `members[c]` lists component `c`'s items ascending,
/// which doubles as its local-to-global index map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSplit {
    pub labels: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl ComponentSplit {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    /// Local index of every item inside its own component.
    pub fn local_index(&self) -> Vec<usize> {
        let mut local = vec![0; self.labels.len()];
        for comp in &self.members {
            for (l, &g) in comp.iter().enumerate() {
                local[g] = l;
            }
        }
        local
    }
}

/// Components of the graph whose edges are the nonzero off-diagonal entries of `adjacency`.
pub fn components_of(adjacency: &CsrMatrix) -> ComponentSplit {
    let n = adjacency.nrows();
    let mut labels = vec![usize::MAX; n];
    let mut members = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        let id = members.len();
        let mut comp = vec![start];
        labels[start] = id;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let (cols, vals) = adjacency.row(u);
            for (&v, &w) in cols.iter().zip(vals) {
                if v != u && w != 0.0 && labels[v] == usize::MAX {
                    labels[v] = id;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        members.push(comp);
    }
    ComponentSplit { labels, members }
}

pub fn connected_components(w: &SparseSimilarity) -> ComponentSplit {
    components_of(w.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn path3() -> SparseSimilarity {
        SparseSimilarity::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn knn_collinear_binary() {
        let pts = array![[0.0], [1.0], [2.0]];
        let w = build_knn_graph(pts.view(), 1, Kernel::Binary).unwrap();
        let edges: Vec<_> = w.edges().collect();
        assert_eq!(edges, vec![(0, 1, 1.0), (1, 2, 1.0)]);
    }

    #[test]
    fn knn_two_points_gaussian() {
        let pts = array![[0.0, 0.0], [1.0, 0.0]];
        let w = build_knn_graph(pts.view(), 1, Kernel::Gaussian { sigma: 1.0 }).unwrap();
        assert!((w.matrix().get(0, 1) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((w.matrix().get(0, 1) - 0.36787944117144233).abs() < 1e-15);
    }

    #[test]
    fn knn_duplicates_get_unit_gaussian_weight() {
        let pts = array![[0.5, 0.5], [0.5, 0.5], [3.0, 3.0]];
        let w = build_knn_graph(pts.view(), 1, Kernel::Gaussian { sigma: 0.1 }).unwrap();
        assert_eq!(w.matrix().get(0, 1), 1.0);
    }

    #[test]
    fn knn_two_far_clusters_two_components() {
        let pts = array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0], [10.0, 10.1]];
        let w = build_knn_graph(pts.view(), 1, Kernel::Binary).unwrap();
        assert_eq!(connected_components(&w).count(), 2);
        assert!(w.is_symmetric());
    }

    #[test]
    fn knn_rejects_bad_k_and_sigma() {
        let pts = array![[0.0], [1.0]];
        assert!(build_knn_graph(pts.view(), 2, Kernel::Binary).is_err());
        assert!(build_knn_graph(pts.view(), 0, Kernel::Binary).is_err());
        assert!(build_knn_graph(pts.view(), 1, Kernel::Gaussian { sigma: 0.0 }).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let w = SparseSimilarity::from_edges(2, vec![(0, 1, 1.0)]).unwrap();
        assert_eq!(laplacian(&w, false).matrix().to_dense(), array![[1.0, -1.0], [-1.0, 1.0]]);
        assert_eq!(
            laplacian(&path3(), false).matrix().to_dense(),
            array![[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]]
        );
        let s = 1.0 / 2f64.sqrt();
        let ln = laplacian(&path3(), true).matrix().to_dense();
        let expected = array![[1.0, -s, 0.0], [-s, 1.0, -s], [0.0, -s, 1.0]];
        assert!((ln - expected).iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn normalized_laplacian_isolated_vertex() {
        let w = SparseSimilarity::from_edges(3, vec![(0, 1, 2.0)]).unwrap();
        let ln = laplacian(&w, true).matrix().to_dense();
        assert_eq!(ln[[2, 2]], 1.0);
        assert_eq!(ln.row(2).sum(), 1.0);
        let lu = laplacian(&w, false).matrix().to_dense();
        assert!(lu.row(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn component_examples() {
        let tri = SparseSimilarity::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(connected_components(&tri).count(), 1);
        let two = SparseSimilarity::from_edges(4, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let split = connected_components(&two);
        assert_eq!(split.labels, vec![0, 0, 1, 1]);
        assert_eq!(split.members, vec![vec![0, 1], vec![2, 3]]);
        let empty = SparseSimilarity::from_edges(5, Vec::new()).unwrap();
        assert_eq!(connected_components(&empty).count(), 5);
    }

    #[test]
    fn rejects_negative_weights_and_self_loops() {
        let neg = CsrMatrix::from_triplets(2, 2, vec![(0, 1, -1.0), (1, 0, -1.0)]).unwrap();
        assert!(SparseSimilarity::from_csr(neg).is_err());
        let lp = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0)]).unwrap();
        assert!(SparseSimilarity::from_csr(lp).is_err());
    }

    #[test]
    fn asymmetric_input_is_flagged() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0)]).unwrap();
        assert!(!SparseSimilarity::from_csr(m).unwrap().is_symmetric());
    }
}
