//! Benchmark instances shared by the criterion benches.

use lasskit_core::eval::{blobs, BlobSpec};
use lasskit_core::graph::{build_knn_graph, laplacian, Kernel, SparseSimilarity};
use lasskit_core::lass::Problem;
use ndarray::Array2;

pub struct Instance {
    pub w: SparseSimilarity,
    pub problem: Problem,
}

/// Gaussian blobs on a binary 10-NN graph with every 50th item labeled.
pub fn blob_instance(n: usize, classes: usize) -> Instance {
    let spec = BlobSpec { n, classes, dim: 2, radius: 4.0, std: 1.0 };
    let data = blobs(&spec, 7).expect("valid blob spec");
    let w = build_knn_graph(data.points.view(), 10, Kernel::Binary).expect("valid graph");
    let mut g = Array2::zeros((n, classes));
    for (i, labels) in data.truth.iter().enumerate().step_by(50) {
        g[[i, labels[0]]] = 1.0;
    }
    let problem = Problem::new(laplacian(&w, false), g, 1.0).expect("valid problem");
    Instance { w, problem }
}

/// Sparse similarities of `count` queries, each to `degree` training items.
pub fn queries(n: usize, count: usize, degree: usize) -> Vec<Vec<(usize, f64)>> {
    (0..count)
        .map(|q| (0..degree).map(|d| ((q * 7919 + d * 104_729) % n, 1.0 / (d + 1) as f64)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_have_the_requested_shape() {
        let inst = blob_instance(300, 3);
        assert_eq!(inst.problem.n(), 300);
        assert_eq!(inst.problem.k(), 3);
        let q = queries(300, 4, 5);
        assert_eq!(q.len(), 4);
        assert!(q.iter().flatten().all(|&(i, v)| i < 300 && v > 0.0));
    }
}
