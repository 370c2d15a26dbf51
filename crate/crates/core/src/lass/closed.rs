use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::kkt::kkt_from_gradient;
use super::{ComponentReport, Diagnostics, SolveMethod, Solution};

/// Categories sharing the maximal value of a row (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieFlag {
    pub row: usize,
    pub categories: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniqueness {
    Unique,
    PossiblyNonunique,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxAssignment {
    pub z: Vec<f64>,
    pub category: usize,
    /// All maximizing categories when more than one attains the max.
    pub tie: Option<Vec<usize>>,
}

/// One-hot vector at the first maximizer of `v`.
pub(crate) fn argmax_assignment(v: ArrayView1<'_, f64>) -> ArgmaxAssignment {
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<usize> = v.iter().enumerate().filter(|(_, x)| **x == best).map(|(k, _)| k).collect();
    let category = winners[0];
    let mut z = vec![0.0; v.len()];
    z[category] = 1.0;
    ArgmaxAssignment { z, category, tie: (winners.len() > 1).then_some(winners) }
}

/// The `lambda = 0` solution: each item goes to its most similar category.
pub fn closed_form_lambda0(g: ArrayView2<'_, f64>) -> Solution {
    let (n, k) = g.dim();
    let mut z = Array2::zeros((n, k));
    let mut pi = Array1::zeros(n);
    let mut m = Array2::zeros((n, k));
    let mut ties = Vec::new();
    for (i, row) in g.axis_iter(Axis(0)).enumerate() {
        let a = argmax_assignment(row);
        let gmax = row[a.category];
        z[[i, a.category]] = 1.0;
        pi[i] = -gmax;
        for c in 0..k {
            m[[i, c]] = gmax - row[c];
        }
        if let Some(categories) = a.tie {
            ties.push(TieFlag { row: i, categories });
        }
    }
    let grad = g.mapv(|v| -v);
    let kkt = kkt_from_gradient(grad.view(), z.view(), pi.view(), m.view());
    let objective = -g.iter().zip(z.iter()).map(|(a, b)| a * b).sum::<f64>();
    let uniqueness = if ties.is_empty() { Uniqueness::Unique } else { Uniqueness::PossiblyNonunique };
    Solution {
        z,
        pi,
        m,
        warm: None,
        diagnostics: Diagnostics {
            method: SolveMethod::ClosedFormLambda0,
            objective,
            raw_objective: objective,
            iterations: 0,
            converged: true,
            kkt,
            ties,
            uniqueness,
            components: vec![ComponentReport {
                size: n,
                rho: None,
                rho_source: None,
                backend: None,
                iterations: 0,
                converged: true,
                last_change: 0.0,
            }],
            notes: Vec::new(),
        },
    }
}

/// The common assignment vector approached as `lambda -> infinity`: all
/// mass on the category with the largest total affinity.
pub fn lp_lambda_inf(g: ArrayView2<'_, f64>) -> ArgmaxAssignment {
    argmax_assignment(g.sum_axis(Axis(0)).view())
}

/// `Unique` when every category has some item with (near) zero assignment.
/// With a single category the constraints force `Z = 1`.
pub fn uniqueness_certificate(z: ArrayView2<'_, f64>, tol: f64) -> Uniqueness {
    if z.ncols() == 1 {
        return Uniqueness::Unique;
    }
    let all_columns_touch_zero = z.axis_iter(Axis(1)).all(|col| col.iter().any(|&v| v <= tol));
    if all_columns_touch_zero {
        Uniqueness::Unique
    } else {
        Uniqueness::PossiblyNonunique
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn picks_the_most_similar_category() {
        let s = closed_form_lambda0(array![[0.3, -0.1, 0.7]].view());
        assert_eq!(s.z, array![[0.0, 0.0, 1.0]]);
        assert!(s.diagnostics.ties.is_empty());
        assert!(s.diagnostics.kkt.max() <= 1e-12);
        assert_eq!(s.diagnostics.iterations, 0);
    }

    #[test]
    fn all_zero_row_ties_over_everything() {
        let s = closed_form_lambda0(array![[0.0, 0.0, 0.0]].view());
        assert_eq!(s.z, array![[1.0, 0.0, 0.0]]);
        assert_eq!(s.diagnostics.ties, vec![TieFlag { row: 0, categories: vec![0, 1, 2] }]);
    }

    #[test]
    fn partial_tie() {
        let s = closed_form_lambda0(array![[0.5, 0.5, 0.1]].view());
        assert_eq!(s.z, array![[1.0, 0.0, 0.0]]);
        assert_eq!(s.diagnostics.ties[0].categories, vec![0, 1]);
        assert_eq!(s.diagnostics.uniqueness, Uniqueness::PossiblyNonunique);
    }

    #[test]
    fn lambda_infinity_limit() {
        assert_eq!(lp_lambda_inf(array![[1.0, 0.0], [0.0, 0.5]].view()).z, vec![1.0, 0.0]);
        let tied = lp_lambda_inf(array![[1.0, 0.0], [0.0, 1.0]].view());
        assert_eq!((tied.category, tied.tie), (0, Some(vec![0, 1])));
        let negative = lp_lambda_inf(array![[-1.0, -0.2], [-0.5, -0.4]].view());
        assert_eq!(negative.category, 1);
        assert!(negative.tie.is_none());
    }

    #[test]
    fn certificate() {
        assert_eq!(uniqueness_certificate(array![[1.0, 0.0], [0.0, 1.0]].view(), 1e-9), Uniqueness::Unique);
        assert_eq!(
            uniqueness_certificate(Array2::from_elem((3, 2), 0.5).view(), 1e-9),
            Uniqueness::PossiblyNonunique
        );
        assert_eq!(uniqueness_certificate(Array2::ones((4, 1)).view(), 1e-9), Uniqueness::Unique);
    }
}
