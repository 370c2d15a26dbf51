//! Euclidean projection onto the probability simplex.

use ndarray::{ArrayViewMut1, Axis};

/// Projects `v` onto `{z >= 0, sum z = 1}` by sorting.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    project_in_place(&mut out);
    out
}

pub fn project_in_place(v: &mut [f64]) {
    assert!(!v.is_empty(), "cannot project onto an empty simplex");
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}

/// Projects every row of `z` in place.
pub fn project_rows(mut z: ndarray::ArrayViewMut2<'_, f64>) {
    for mut row in z.axis_iter_mut(Axis(0)) {
        project_row(&mut row);
    }
}

fn project_row(row: &mut ArrayViewMut1<'_, f64>) {
    match row.as_slice_mut() {
        Some(s) => project_in_place(s),
        None => {
            let p = project_simplex(&row.to_vec());
            row.iter_mut().zip(p).for_each(|(r, x)| *r = x);
        }
    }
}
