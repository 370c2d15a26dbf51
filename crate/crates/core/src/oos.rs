//! Out-of-sample assignment of a new item from its similarities `w` to the
//! training items and its affinities `g` to the categories:
//! `z = Pi(zbar + gamma g)` with `zbar = Z^T w / 1^T w` and
//! `gamma = 1 / (2 lambda 1^T w)`.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LassError, Result};
use crate::lass::{closed_form_lambda0, ArgmaxAssignment};
use crate::simplex::project_simplex;

const DEFAULT_CACHE_CAPACITY: usize = 1024;

/// Similarities of a query to the training items, as `(index, weight)` pairs.
pub type SparseWeights = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OosQuery {
    pub w: SparseWeights,
    pub g: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OosMode {
    Projected,
    Lambda0ClosedForm,
    CrowdOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OosPrediction {
    pub z: Vec<f64>,
    /// Weighted average of the neighbors' assignments; absent when `w = 0`.
    pub zbar: Option<Vec<f64>>,
    /// `1 / (2 lambda 1^T w)`; absent when undefined.
    pub gamma: Option<f64>,
    pub mode: OosMode,
    /// Categories tied for the max of `g` in the closed-form mode.
    pub tie: Option<Vec<usize>>,
    pub warning: Option<String>,
}

/// `zbar` and `1^T w` for one similarity vector.
#[derive(Debug, Clone, PartialEq)]
struct Crowd {
    zbar: Option<Vec<f64>>,
    total: f64,
}

struct BoundedCache {
    capacity: usize,
    map: HashMap<[u8; 32], Arc<Crowd>>,
    order: VecDeque<[u8; 32]>,
}

impl BoundedCache {
    fn get(&self, key: &[u8; 32]) -> Option<Arc<Crowd>> {
        self.map.get(key).cloned()
    }

    fn insert(&mut self, key: [u8; 32], value: Arc<Crowd>) {
        if self.capacity == 0 || self.map.contains_key(&key) {
            return;
        }
        if self.map.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.map.remove(&old);
            }
        }
        self.order.push_back(key);
        self.map.insert(key, value);
    }
}

/// A trained assignment matrix ready for queries. The `zbar` cache is keyed by
/// a content hash of the canonicalized `w`.
pub struct OosModel {
    z: Array2<f64>,
    cache: Mutex<BoundedCache>,
}

impl std::fmt::Debug for OosModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OosModel").field("n", &self.n()).field("k", &self.k()).finish()
    }
}

impl OosModel {
    pub fn new(z: Array2<f64>) -> Result<Self> {
        Self::with_cache_capacity(z, DEFAULT_CACHE_CAPACITY)
    }

    pub fn with_cache_capacity(z: Array2<f64>, capacity: usize) -> Result<Self> {
        if z.ncols() == 0 {
            return Err(LassError::invalid("model needs at least one category"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(LassError::invalid("model assignments must be finite"));
        }
        Ok(OosModel {
            z,
            cache: Mutex::new(BoundedCache { capacity, map: HashMap::new(), order: VecDeque::new() }),
        })
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn k(&self) -> usize {
        self.z.ncols()
    }

    pub fn z(&self) -> ArrayView2<'_, f64> {
        self.z.view()
    }

    pub fn predict(&self, q: &OosQuery) -> Result<OosPrediction> {
        self.predict_traced(q).map(|(p, _)| p)
    }

    /// Also reports whether `zbar` came from the cache.
    pub fn predict_traced(&self, q: &OosQuery) -> Result<(OosPrediction, bool)> {
        check_lambda(q.lambda, true)?;
        self.check_g(&q.g)?;
        let (crowd, hit) = self.crowd(&q.w)?;
        Ok((predict_from_crowd(&crowd, &q.g, q.lambda), hit))
    }

    /// Predictions for each `lambda > 0`, sharing one `zbar` computation.
    pub fn lambda_path(&self, w: &[(usize, f64)], g: &[f64], lambdas: &[f64]) -> Result<Vec<OosPrediction>> {
        self.lambda_path_traced(w, g, lambdas).map(|(p, _)| p)
    }

    pub fn lambda_path_traced(
        &self,
        w: &[(usize, f64)],
        g: &[f64],
        lambdas: &[f64],
    ) -> Result<(Vec<OosPrediction>, bool)> {
        for &l in lambdas {
            check_lambda(l, false)?;
        }
        self.check_g(g)?;
        if lambdas.is_empty() {
            return Ok((Vec::new(), false));
        }
        let (crowd, hit) = self.crowd(w)?;
        Ok((lambdas.iter().map(|&l| predict_from_crowd(&crowd, g, l)).collect(), hit))
    }

    /// Prediction with `g` built from `edits` over a zero base.
    pub fn whatif(&self, w: &[(usize, f64)], edits: &[(usize, f64)], lambda: f64) -> Result<OosPrediction> {
        let mut g = vec![0.0; self.k()];
        for &(k, v) in edits {
            if k >= self.k() {
                return Err(LassError::invalid(format!("edit index {k} out of range for {} categories", self.k())));
            }
            g[k] = v;
        }
        self.predict(&OosQuery { w: w.to_vec(), g, lambda })
    }

    fn check_g(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.k() {
            return Err(LassError::dims(format!("g has {} entries, model has {} categories", g.len(), self.k())));
        }
        if let Some(v) = g.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(LassError::invalid(format!("affinity {v} is outside [-1, 1]")));
        }
        Ok(())
    }

    fn crowd(&self, w: &[(usize, f64)]) -> Result<(Arc<Crowd>, bool)> {
        let canonical = canonicalize_weights(w, self.n())?;
        let key = weights_key(&canonical);
        if let Some(c) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok((c, true));
        }
        let total: f64 = canonical.iter().map(|(_, v)| v).sum();
        let zbar = (total > 0.0).then(|| weighted_average_canonical(self.z.view(), &canonical, total));
        let crowd = Arc::new(Crowd { zbar, total });
        self.cache.lock().expect("cache lock").insert(key, crowd.clone());
        Ok((crowd, false))
    }
}

pub fn oos_predict(model: &OosModel, q: &OosQuery) -> Result<OosPrediction> {
    model.predict(q)
}

fn check_lambda(lambda: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { lambda >= 0.0 } else { lambda > 0.0 };
    if !ok {
        let bound = if allow_zero { ">= 0" } else { "> 0" };
        return Err(LassError::invalid(format!("lambda must be {bound}, got {lambda}")));
    }
    Ok(())
}

/// Sorted by index, duplicates summed, zeros dropped.
pub(crate) fn canonicalize_weights(w: &[(usize, f64)], n: usize) -> Result<Vec<(usize, f64)>> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(w.len());
    for &(i, v) in w {
        if i >= n {
            return Err(LassError::dims(format!("similarity index {i} out of range for {n} training items")));
        }
        if !(v >= 0.0) || !v.is_finite() {
            return Err(LassError::invalid(format!("similarity w[{i}] = {v} must be finite and >= 0")));
        }
    }
    let mut sorted = w.to_vec();
    sorted.sort_by_key(|&(i, _)| i);
    for (i, v) in sorted {
        match out.last_mut() {
            Some((j, acc)) if *j == i => *acc += v,
            _ => out.push((i, v)),
        }
    }
    out.retain(|&(_, v)| v != 0.0);
    Ok(out)
}

fn weights_key(canonical: &[(usize, f64)]) -> [u8; 32] {
    let mut h = Sha256::new();
    for &(i, v) in canonical {
        h.update((i as u64).to_le_bytes());
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().into()
}

fn weighted_average_canonical(z: ArrayView2<'_, f64>, w: &[(usize, f64)], total: f64) -> Vec<f64> {
    let mut acc = vec![0.0; z.ncols()];
    for &(i, v) in w {
        for (a, zk) in acc.iter_mut().zip(z.row(i)) {
            *a += v * zk;
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    acc
}

/// `sum_n w_n z_n / sum_n w_n`; `None` when `w = 0`.
pub(crate) fn weighted_average(z: ArrayView2<'_, f64>, w: &[(usize, f64)]) -> Result<Option<Vec<f64>>> {
    let canonical = canonicalize_weights(w, z.nrows())?;
    let total: f64 = canonical.iter().map(|(_, v)| v).sum();
    Ok((total > 0.0).then(|| weighted_average_canonical(z, &canonical, total)))
}

fn predict_from_crowd(crowd: &Crowd, g: &[f64], lambda: f64) -> OosPrediction {
    let k = g.len();
    let g_zero = g.iter().all(|&v| v == 0.0);
    let zbar = match &crowd.zbar {
        Some(zbar) if lambda > 0.0 => zbar,
        _ => {
            let gamma = None;
            if g_zero {
                return OosPrediction {
                    z: vec![1.0 / k as f64; k],
                    zbar: crowd.zbar.clone(),
                    gamma,
                    mode: OosMode::Lambda0ClosedForm,
                    tie: Some((0..k).collect()),
                    warning: Some("no similarities and no affinities; returning the barycenter".into()),
                };
            }
            let a = argmax_row(g);
            return OosPrediction {
                z: a.z,
                zbar: crowd.zbar.clone(),
                gamma,
                mode: OosMode::Lambda0ClosedForm,
                tie: a.tie,
                warning: None,
            };
        }
    };
    let gamma = 1.0 / (2.0 * lambda * crowd.total);
    if g_zero {
        return OosPrediction {
            z: zbar.clone(),
            zbar: Some(zbar.clone()),
            gamma: Some(gamma),
            mode: OosMode::CrowdOnly,
            tie: None,
            warning: None,
        };
    }
    let shifted: Vec<f64> = zbar.iter().zip(g).map(|(a, b)| a + gamma * b).collect();
    OosPrediction {
        z: project_simplex(&shifted),
        zbar: Some(zbar.clone()),
        gamma: Some(gamma),
        mode: OosMode::Projected,
        tie: None,
        warning: None,
    }
}

fn argmax_row(g: &[f64]) -> ArgmaxAssignment {
    let sol = closed_form_lambda0(ndarray::ArrayView2::from_shape((1, g.len()), g).expect("one row"));
    let tie = sol.diagnostics.ties.into_iter().next().map(|t| t.categories);
    let z = sol.z.row(0).to_vec();
    let category = z.iter().position(|&v| v == 1.0).expect("one-hot");
    ArgmaxAssignment { z, category, tie }
}
