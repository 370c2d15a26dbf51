//! Synthetic datasets and a loader for external CSV data.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{LassError, Result};
use crate::io::read_dense_csv_file;

/// Points with a ground-truth category set per item.
///
/// Classification datasets carry exactly one category per item.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Array2<f64>,
    pub truth: Vec<Vec<usize>>,
    pub k: usize,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    /// First category of every item.
    pub fn classes(&self) -> Vec<usize> {
        self.truth.iter().map(|t| t[0]).collect()
    }

    /// Number of items tagged with each category.
    pub fn category_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for set in &self.truth {
            for &c in set {
                counts[c] += 1;
            }
        }
        counts
    }
}

/// Two interleaved half circles; the first `n/2` points form moon 0.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || n % 2 != 0 {
        return Err(LassError::invalid(format!("two moons needs an even, positive n (got {n})")));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(LassError::invalid(format!("noise must be nonnegative, got {noise}")));
    }
    let half = n / 2;
    let mut points = Array2::zeros((n, 2));
    let mut truth = Vec::with_capacity(n);
    for i in 0..half {
        let t = if half > 1 { PI * i as f64 / (half - 1) as f64 } else { 0.0 };
        points[[i, 0]] = t.cos();
        points[[i, 1]] = t.sin();
        points[[half + i, 0]] = 1.0 - t.cos();
        points[[half + i, 1]] = 0.5 - t.sin();
    }
    truth.extend((0..half).map(|_| vec![0]));
    truth.extend((0..half).map(|_| vec![1]));
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise).expect("positive noise");
        points.mapv_inplace(|v| v + normal.sample(&mut rng));
    }
    Ok(Dataset { points, truth, k: 2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub n: usize,
    pub classes: usize,
    pub dim: usize,
    /// Distance of each class center from the origin.
    pub radius: f64,
    /// Per-coordinate standard deviation around the center.
    pub std: f64,
}

/// Isotropic Gaussian blobs with centers evenly spaced on a circle.
///
/// Class sizes differ by at most one; items are ordered by class.
pub fn blobs(spec: &BlobSpec, seed: u64) -> Result<Dataset> {
    let BlobSpec { n, classes, dim, radius, std } = *spec;
    if classes == 0 || n < classes {
        return Err(LassError::invalid(format!("need 1 <= classes <= n (classes = {classes}, n = {n})")));
    }
    if dim < 2 {
        return Err(LassError::invalid("blobs need at least 2 dimensions"));
    }
    if !(std > 0.0) || !radius.is_finite() || !std.is_finite() {
        return Err(LassError::invalid("blob std must be positive and radius finite"));
    }
    let normal = Normal::new(0.0, std).expect("positive std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Array2::zeros((n, dim));
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let c = i * classes / n;
        let angle = 2.0 * PI * c as f64 / classes as f64;
        for d in 0..dim {
            let center = match d {
                0 => radius * angle.cos(),
                1 => radius * angle.sin(),
                _ => 0.0,
            };
            points[[i, d]] = center + normal.sample(&mut rng);
        }
        truth.push(vec![c]);
    }
    Ok(Dataset { points, truth, k: classes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultitagSpec {
    pub n: usize,
    pub categories: usize,
    /// Latent clusters; each has its own tag set and center.
    pub clusters: usize,
    pub dim: usize,
    pub min_tags: usize,
    pub max_tags: usize,
    /// Category popularity decays as `1 / (rank + 1)^popularity`.
    pub popularity: f64,
    /// Spread of cluster centers (uniform in `[-spread, spread]^dim`).
    pub spread: f64,
    pub std: f64,
    /// Probability that an item keeps each of its cluster's tags.
    pub keep: f64,
}

impl Default for MultitagSpec {
    fn default() -> Self {
        MultitagSpec {
            n: 2000,
            categories: 20,
            clusters: 40,
            dim: 6,
            min_tags: 4,
            max_tags: 7,
            popularity: 1.0,
            spread: 1.0,
            std: 0.35,
            keep: 0.85,
        }
    }
}

/// Items drawn around latent clusters, each cluster carrying a tag set
/// biased toward popular categories.
pub fn multitag(spec: &MultitagSpec, seed: u64) -> Result<Dataset> {
    let s = *spec;
    if s.n == 0 || s.clusters == 0 || s.dim == 0 {
        return Err(LassError::invalid("multitag needs positive n, clusters and dim"));
    }
    if s.min_tags == 0 || s.min_tags > s.max_tags || s.max_tags > s.categories {
        return Err(LassError::invalid(format!(
            "need 1 <= min_tags <= max_tags <= categories (got {}, {}, {})",
            s.min_tags, s.max_tags, s.categories
        )));
    }
    if !(s.keep > 0.0 && s.keep <= 1.0) || !(s.std > 0.0) || !(s.spread >= 0.0) || !s.popularity.is_finite() {
        return Err(LassError::invalid("multitag needs keep in (0, 1], std > 0, spread >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let popularity: Vec<f64> = (0..s.categories).map(|c| (c as f64 + 1.0).powf(-s.popularity)).collect();

    let mut centers = Array2::zeros((s.clusters, s.dim));
    let mut tag_sets = Vec::with_capacity(s.clusters);
    for c in 0..s.clusters {
        for d in 0..s.dim {
            centers[[c, d]] = rng.random_range(-s.spread..=s.spread);
        }
        let size = rng.random_range(s.min_tags..=s.max_tags);
        tag_sets.push(weighted_without_replacement(&popularity, size, &mut rng));
    }

    let normal = Normal::new(0.0, s.std).expect("positive std");
    let mut points = Array2::zeros((s.n, s.dim));
    let mut truth = Vec::with_capacity(s.n);
    for i in 0..s.n {
        let c = rng.random_range(0..s.clusters);
        for d in 0..s.dim {
            points[[i, d]] = centers[[c, d]] + normal.sample(&mut rng);
        }
        let mut tags: Vec<usize> = tag_sets[c].iter().copied().filter(|_| rng.random_bool(s.keep)).collect();
        if tags.is_empty() {
            tags.push(tag_sets[c][0]);
        }
        tags.sort_unstable();
        truth.push(tags);
    }
    Ok(Dataset { points, truth, k: s.categories })
}

fn weighted_without_replacement(weights: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut w = weights.to_vec();
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        let dist = WeightedIndex::new(&w).expect("positive weights remain");
        let c = dist.sample(rng);
        picked.push(c);
        w[c] = 0.0;
    }
    picked
}

/// Loads a points CSV and a category file with one line of 0-based
/// category ids (comma or whitespace separated) per point.
pub fn load_csv_dataset(points: &Path, labels: &Path, categories: Option<usize>) -> Result<Dataset> {
    let points = read_dense_csv_file(points)?;
    let text = std::fs::read_to_string(labels)?;
    let mut truth = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut set = Vec::new();
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let c = tok.parse::<usize>().map_err(|_| {
                LassError::parse(format!("{}: line {}", labels.display(), lineno + 1), format!("bad category id {tok:?}"))
            })?;
            set.push(c);
        }
        set.sort_unstable();
        set.dedup();
        truth.push(set);
    }
    if truth.len() != points.nrows() {
        return Err(LassError::dims(format!("{} points but {} label lines", points.nrows(), truth.len())));
    }
    let max_id = truth.iter().flatten().copied().max().map_or(0, |m| m + 1);
    let k = categories.unwrap_or(max_id);
    if max_id > k || k == 0 {
        return Err(LassError::invalid(format!("category ids must lie in 0..{k}")));
    }
    Ok(Dataset { points, truth, k })
}

/// Random subset of `items` of size `min(count, items.len())`, in drawn order.
pub(crate) fn choose(items: &[usize], count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let count = count.min(items.len());
    sample(rng, items.len(), count).into_iter().map(|i| items[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_knn_graph, connected_components, Kernel};

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let d = two_moons(100, 0.0, 1).unwrap();
        for i in 0..50 {
            let (x, y) = (d.points[[i, 0]], d.points[[i, 1]]);
            assert!((x * x + y * y - 1.0).abs() < 1e-12);
            let (x, y) = (d.points[[50 + i, 0]] - 1.0, d.points[[50 + i, 1]] - 0.5);
            assert!((x * x + y * y - 1.0).abs() < 1e-12);
        }
        assert_eq!(d.classes()[0], 0);
        assert_eq!(d.classes()[99], 1);
    }

    #[test]
    fn moons_are_deterministic_per_seed() {
        assert_eq!(two_moons(200, 0.1, 7).unwrap(), two_moons(200, 0.1, 7).unwrap());
        assert_ne!(two_moons(200, 0.1, 7).unwrap(), two_moons(200, 0.1, 8).unwrap());
        assert!(two_moons(3, 0.1, 7).is_err());
    }

    #[test]
    fn moons_graph_is_nearly_connected() {
        let d = two_moons(4000, 0.05, 3).unwrap();
        let w = build_knn_graph(d.points.view(), 5, Kernel::Binary).unwrap();
        assert!(connected_components(&w).count() <= 2);
    }

    #[test]
    fn blobs_are_balanced() {
        let spec = BlobSpec { n: 10, classes: 3, dim: 2, radius: 3.0, std: 1.0 };
        let d = blobs(&spec, 1).unwrap();
        assert_eq!(d.category_counts(), vec![4, 3, 3]);
    }

    #[test]
    fn multitag_sets_are_valid() {
        let spec = MultitagSpec { n: 300, ..Default::default() };
        let d = multitag(&spec, 5).unwrap();
        assert_eq!(d.n(), 300);
        for set in &d.truth {
            assert!(!set.is_empty() && set.len() <= spec.max_tags);
            assert!(set.windows(2).all(|p| p[0] < p[1]));
            assert!(set.iter().all(|&c| c < 20));
        }
        let counts = d.category_counts();
        assert!(counts[0] > counts[19]);
    }

    #[test]
    fn csv_dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        let l = dir.path().join("y.txt");
        std::fs::write(&p, "0,0\n1,1\n2,2\n").unwrap();
        std::fs::write(&l, "0\n1, 2\n# note\n2 0\n").unwrap();
        let d = load_csv_dataset(&p, &l, None).unwrap();
        assert_eq!(d.k, 3);
        assert_eq!(d.truth, vec![vec![0], vec![1, 2], vec![0, 2]]);
        std::fs::write(&l, "0\nx\n1\n").unwrap();
        let err = load_csv_dataset(&p, &l, None).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
