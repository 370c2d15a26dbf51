//! Harmonic-function label propagation, its variants, and LASS with some
//! assignments held fixed.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{LassError, Result};
use crate::graph::{components_of, laplacian, GraphLaplacian, SparseSimilarity};
use crate::lass::{solve, Problem, Solution, SolverConfig};
use crate::linsolve::SparseCholesky;
use crate::oos::weighted_average;

/// Labeled items with their fixed assignment rows; the rest are unlabeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSplit {
    n: usize,
    labeled: Vec<usize>,
    z_l: Array2<f64>,
    unlabeled: Vec<usize>,
}

impl LabeledSplit {
    pub fn new(n: usize, labeled: Vec<usize>, z_l: Array2<f64>) -> Result<Self> {
        if z_l.nrows() != labeled.len() {
            return Err(LassError::dims(format!(
                "{} labeled items but {} label rows",
                labeled.len(),
                z_l.nrows()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &labeled {
            if i >= n {
                return Err(LassError::invalid(format!("labeled index {i} out of range for {n} items")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(LassError::invalid(format!("item {i} is labeled twice")));
            }
        }
        if z_l.iter().any(|v| !v.is_finite()) {
            return Err(LassError::invalid("labels must be finite"));
        }
        let unlabeled = (0..n).filter(|&i| !seen[i]).collect();
        Ok(LabeledSplit { n, labeled, z_l, unlabeled })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.z_l.ncols()
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn z_l(&self) -> ArrayView2<'_, f64> {
        self.z_l.view()
    }

    /// Full `N x K` matrix with `z_u` placed at the unlabeled rows.
    pub fn assemble(&self, z_u: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if z_u.dim() != (self.unlabeled.len(), self.k()) {
            return Err(LassError::dims("unlabeled block has the wrong shape"));
        }
        let mut z = Array2::zeros((self.n, self.k()));
        for (r, &i) in self.labeled.iter().enumerate() {
            z.row_mut(i).assign(&self.z_l.row(r));
        }
        for (r, &i) in self.unlabeled.iter().enumerate() {
            z.row_mut(i).assign(&z_u.row(r));
        }
        Ok(z)
    }
}

/// `Z_u = L_uu^-1 (-L_ul) Z_l`, which is `L_uu^-1 W_ul Z_l` for the unnormalized Laplacian.
pub fn harmonic_solve(l: &GraphLaplacian, split: &LabeledSplit) -> Result<Array2<f64>> {
    if l.n() != split.n() {
        return Err(LassError::dims(format!("graph has {} items, split has {}", l.n(), split.n())));
    }
    let comps = components_of(&l.adjacency());
    let mut has_label = vec![false; comps.count()];
    for &i in split.labeled() {
        has_label[comps.labels[i]] = true;
    }
    if let Some(&i) = split.unlabeled().iter().find(|&&i| !has_label[comps.labels[i]]) {
        return Err(LassError::UnlabeledComponent { component: comps.labels[i] });
    }
    let (u, lab) = (split.unlabeled(), split.labeled());
    let k = split.k();
    if u.is_empty() {
        return Ok(Array2::zeros((0, k)));
    }
    let l_uu = l.matrix().submatrix(u, u);
    let l_ul = l.matrix().submatrix(u, lab);
    let rhs = l_ul.mul_dense(split.z_l()).mapv(|v| -v);
    let chol = SparseCholesky::factorize(&l_uu)?;
    let mut z_u = rhs.as_standard_layout().into_owned();
    chol.solve_block_in_place(z_u.as_slice_mut().expect("standard layout"), k);
    Ok(z_u)
}

/// Harmonic solve with the normalized Laplacian.
pub fn ssl2_solve(w: &SparseSimilarity, split: &LabeledSplit) -> Result<Array2<f64>> {
    harmonic_solve(&laplacian(w, true), split)
}

/// Out-of-sample label propagation: `sum_n w_n z_n / sum_n w_n`.
pub fn ssl_oos(z: ArrayView2<'_, f64>, w: &[(usize, f64)]) -> Result<Vec<f64>> {
    weighted_average(z, w)?.ok_or_else(|| LassError::invalid("label propagation needs at least one positive similarity"))
}

/// Scales column `k` by `priors[k] / mass[k]` so predicted class masses follow
/// the priors. Returns the scores and any warnings.
pub fn class_mass_normalize(z: ArrayView2<'_, f64>, priors: &[f64]) -> Result<(Array2<f64>, Vec<String>)> {
    if priors.len() != z.ncols() {
        return Err(LassError::dims("one prior per category is required"));
    }
    if priors.iter().any(|p| !(*p > 0.0)) || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(LassError::invalid("priors must be positive and sum to 1"));
    }
    let mut out = z.to_owned();
    let mut warnings = Vec::new();
    for (k, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let mass = col.sum();
        if mass == 0.0 {
            warnings.push(format!("category {k} has zero predicted mass and cannot be rescaled"));
            continue;
        }
        col.mapv_inplace(|v| v * priors[k] / mass);
    }
    Ok((out, warnings))
}

/// Label rows converted from affinities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvertedLabels {
    pub rows: Vec<usize>,
    pub z: Array2<f64>,
}

/// Weight 1 where `g > 0`, `epsilon` where `g = 0` and 0 where `g < 0`,
/// normalized per row. All-zero rows stay unlabeled. A row with no positive
/// entry and `epsilon = 0` spreads evenly over its zero entries.
pub fn labels_from_affinities(g: ArrayView2<'_, f64>, epsilon: f64) -> Result<ConvertedLabels> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(LassError::invalid(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let k = g.ncols();
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for (n, row) in g.axis_iter(Axis(0)).enumerate() {
        if row.iter().all(|&v| v == 0.0) {
            continue;
        }
        if row.iter().all(|&v| v < 0.0) {
            return Err(LassError::Infeasible {
                row: n,
                reason: "every category has a negative affinity".into(),
            });
        }
        let mut weights: Vec<f64> = row
            .iter()
            .map(|&v| if v > 0.0 { 1.0 } else if v == 0.0 { epsilon } else { 0.0 })
            .collect();
        let mut total: f64 = weights.iter().sum();
        if total == 0.0 {
            weights = row.iter().map(|&v| if v == 0.0 { 1.0 } else { 0.0 }).collect();
            total = weights.iter().sum();
        }
        data.extend(weights.iter().map(|w| w / total));
        rows.push(n);
    }
    let z = Array2::from_shape_vec((rows.len(), k), data).expect("row-major layout");
    Ok(ConvertedLabels { rows, z })
}

/// Result of LASS with fixed labeled rows.
#[derive(Debug, Clone)]
pub struct LabeledSolution {
    /// Solution on the unlabeled block, in `split.unlabeled()` order.
    pub unlabeled: Solution,
    /// Objective terms that depend only on the labeled rows; adding this to
    /// `unlabeled.diagnostics.objective` gives the full objective.
    pub labeled_constant: f64,
}

/// Minimizes the full objective over `Z_u` with `Z_l` fixed, by reduction to
/// a standard problem on the unlabeled block with operator
/// `L(W_uu) + diag(W_ul 1)` and linear term `G_u + 2 lambda W_ul Z_l`.
pub fn lass_with_labels(p: &Problem, split: &LabeledSplit, cfg: &SolverConfig) -> Result<LabeledSolution> {
    if split.n() != p.n() || split.k() != p.k() {
        return Err(LassError::dims("split does not match the problem"));
    }
    for (r, row) in split.z_l().axis_iter(Axis(0)).enumerate() {
        if (row.sum() - 1.0).abs() > 1e-8 || row.iter().any(|&v| v < 0.0) {
            return Err(LassError::Infeasible { row: split.labeled()[r], reason: "label row is not on the simplex".into() });
        }
    }
    let (u, lab) = (split.unlabeled(), split.labeled());
    let lambda = p.lambda();
    let w = p.laplacian().adjacency();
    let w_uu = SparseSimilarity::from_csr(w.submatrix(u, u))?;
    let w_ul = w.submatrix(u, lab);
    let anchor = w_ul.row_sums();
    let mut g_eff = p.g().select(Axis(0), u);
    g_eff.scaled_add(2.0 * lambda, &w_ul.mul_dense(split.z_l()));

    let reduced = Problem::with_linear_term(laplacian(&w_uu, false), g_eff, lambda)?
        .with_ridge(p.ridge_epsilon())?
        .with_anchor(anchor)?;
    let unlabeled = solve(&reduced, cfg, None)?;

    let z_l = split.z_l();
    let l_ll = p.laplacian().matrix().submatrix(lab, lab);
    let quad: f64 = (&l_ll.mul_dense(z_l) * &z_l).sum();
    let g_l = p.g().select(Axis(0), lab);
    let lin: f64 = (&g_l * &z_l).sum();
    let ridge = p.ridge_epsilon() * z_l.iter().map(|v| v * v).sum::<f64>();
    Ok(LabeledSolution { unlabeled, labeled_constant: lambda * quad + ridge - lin })
}
