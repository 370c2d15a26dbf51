//! Classification and tagging metrics over prediction matrices.

use ndarray::{ArrayView1, ArrayView2, Axis};

use crate::error::{LassError, Result};

/// Indices of the `t` largest entries, ties broken toward the lower index.
pub fn top_indices(row: ArrayView1<'_, f64>, t: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(t);
    idx
}

/// First index of the largest entry.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    top_indices(row, 1)[0]
}

/// Fraction of rows whose argmax differs from the true class.
pub fn argmax_error(predicted: ArrayView2<'_, f64>, truth: &[usize]) -> Result<f64> {
    check_rows(predicted, truth.len())?;
    let k = predicted.ncols();
    if let Some(&c) = truth.iter().find(|&&c| c >= k) {
        return Err(LassError::invalid(format!("class id {c} out of range for {k} categories")));
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let wrong = predicted
        .axis_iter(Axis(0))
        .zip(truth)
        .filter(|(row, &c)| argmax(*row) != c)
        .count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Fraction of rows whose top-`|truth|` categories differ from the truth set.
pub fn top_t_set_error(predicted: ArrayView2<'_, f64>, truth_sets: &[Vec<usize>]) -> Result<f64> {
    check_sets(predicted, truth_sets)?;
    if truth_sets.is_empty() {
        return Ok(0.0);
    }
    let wrong = predicted
        .axis_iter(Axis(0))
        .zip(truth_sets)
        .filter(|(row, truth)| {
            let mut top = top_indices(*row, truth.len());
            let mut want = (*truth).clone();
            top.sort_unstable();
            want.sort_unstable();
            top != want
        })
        .count();
    Ok(wrong as f64 / truth_sets.len() as f64)
}

/// Macro-averaged precision, recall and F1 of the top-`annotation_length` categories.
pub fn precision_recall_f1(
    predicted: ArrayView2<'_, f64>,
    truth_sets: &[Vec<usize>],
    annotation_length: usize,
) -> Result<(f64, f64, f64)> {
    if annotation_length == 0 {
        return Err(LassError::invalid("annotation length must be at least 1"));
    }
    check_sets(predicted, truth_sets)?;
    if truth_sets.is_empty() {
        return Ok((0.0, 0.0, 0.0));
    }
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for (row, truth) in predicted.axis_iter(Axis(0)).zip(truth_sets) {
        let top = top_indices(row, annotation_length);
        let hits = top.iter().filter(|c| truth.contains(c)).count() as f64;
        let p = hits / annotation_length as f64;
        let r = hits / truth.len() as f64;
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }
    let n = truth_sets.len() as f64;
    Ok((p_sum / n, r_sum / n, f_sum / n))
}

fn check_rows(predicted: ArrayView2<'_, f64>, n: usize) -> Result<()> {
    if predicted.nrows() != n {
        return Err(LassError::dims(format!("{} prediction rows for {n} items", predicted.nrows())));
    }
    if predicted.ncols() == 0 && n > 0 {
        return Err(LassError::invalid("predictions have no categories"));
    }
    Ok(())
}

fn check_sets(predicted: ArrayView2<'_, f64>, truth_sets: &[Vec<usize>]) -> Result<()> {
    check_rows(predicted, truth_sets.len())?;
    let k = predicted.ncols();
    for (n, set) in truth_sets.iter().enumerate() {
        if set.is_empty() {
            return Err(LassError::invalid(format!("item {n} has an empty truth set")));
        }
        if set.len() > k || set.iter().any(|&c| c >= k) {
            return Err(LassError::invalid(format!("item {n} has categories outside 0..{k}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn one_hot_truth_has_no_error() {
        let p = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(argmax_error(p.view(), &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn uniform_rows_break_ties_low() {
        let p = Array2::from_elem((4, 3), 1.0 / 3.0);
        assert_eq!(argmax_error(p.view(), &[0, 1, 2, 0]).unwrap(), 0.5);
    }

    #[test]
    fn one_wrong_in_four() {
        let p = array![[0.9, 0.1], [0.2, 0.8], [0.6, 0.4], [0.3, 0.7]];
        assert_eq!(argmax_error(p.view(), &[0, 1, 1, 1]).unwrap(), 0.25);
    }

    #[test]
    fn set_errors() {
        let p = array![[0.5, 0.4, 0.1], [0.5, 0.1, 0.4]];
        assert_eq!(top_t_set_error(p.view(), &[vec![1, 0], vec![0, 1]]).unwrap(), 0.5);
        let p5 = Array2::from_shape_fn((5, 3), |(i, j)| if j == i % 3 { 1.0 } else { 0.0 });
        let truth: Vec<Vec<usize>> = vec![vec![0], vec![1], vec![0], vec![2], vec![1]];
        assert_eq!(top_t_set_error(p5.view(), &truth).unwrap(), 0.4);
        assert!(top_t_set_error(p.view(), &[vec![], vec![0]]).is_err());
    }

    #[test]
    fn precision_recall_examples() {
        let row = Array2::from_shape_fn((1, 10), |(_, j)| 10.0 - j as f64);
        let (p, r, f) = precision_recall_f1(row.view(), &[vec![0, 1, 2, 3, 4]], 5).unwrap();
        assert_eq!((p, r, f), (1.0, 1.0, 1.0));
        let (p, r, f) = precision_recall_f1(row.view(), &[(0..10).collect()], 5).unwrap();
        assert_eq!((p, r), (1.0, 0.5));
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        let (p, r, f) = precision_recall_f1(row.view(), &[vec![7, 8, 9]], 5).unwrap();
        assert_eq!((p, r, f), (0.0, 0.0, 0.0));
    }
}
