//! Up-looking sparse Cholesky factorization `P A P^T = R R^T` with `R`
//! lower triangular and stored by columns.

use crate::error::{LassError, Result};
use crate::sparse::CsrMatrix;

use super::ordering::approximate_minimum_degree;

#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    /// `perm[k]` is the original index placed at position `k`.
    perm: Vec<usize>,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    values: Vec<f64>,
    input_lower_nnz: usize,
}

impl SparseCholesky {
    /// Factorizes a symmetric positive definite matrix using a minimum-degree ordering.
    pub fn factorize(a: &CsrMatrix) -> Result<Self> {
        let perm = approximate_minimum_degree(a);
        Self::factorize_with_ordering(a, perm)
    }

    pub fn factorize_with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || perm.len() != n {
            return Err(LassError::dims("cholesky needs a square matrix and a matching ordering"));
        }
        let mut inv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            inv[i] = k;
        }

        // Row k of the permuted lower triangle: entries (k, j) with j <= k.
        let mut lower: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj <= pi {
                lower[pi].push((pj, v));
            }
        }
        let input_lower_nnz = lower.iter().map(Vec::len).sum();

        let parent = elimination_tree(&lower);

        // Column counts of R from the row patterns.
        let mut counts = vec![1usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut stack = vec![0usize; n];
        for (k, row) in lower.iter().enumerate() {
            let top = row_pattern(k, row, &parent, &mut flag, &mut stack);
            for &j in &stack[top..] {
                counts[j] += 1;
            }
        }
        let mut colptr = vec![0usize; n + 1];
        for j in 0..n {
            colptr[j + 1] = colptr[j] + counts[j];
        }
        let nnz = colptr[n];
        let mut rowidx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = colptr[..n].to_vec();

        let mut x = vec![0.0; n];
        flag.iter_mut().for_each(|f| *f = usize::MAX);
        for (k, row) in lower.iter().enumerate() {
            let top = row_pattern(k, row, &parent, &mut flag, &mut stack);
            let mut d = 0.0;
            for &(j, v) in row {
                if j == k {
                    d += v;
                } else {
                    x[j] += v;
                }
            }
            // Stack holds the pattern in topological order (descendants first).
            for &j in &stack[top..] {
                let start = colptr[j];
                let lkj = x[j] / values[start];
                x[j] = 0.0;
                for p in start + 1..next[j] {
                    x[rowidx[p]] -= values[p] * lkj;
                }
                d -= lkj * lkj;
                let p = next[j];
                next[j] += 1;
                rowidx[p] = k;
                values[p] = lkj;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(LassError::NotPositiveDefinite { pivot: perm[k], value: d });
            }
            let p = next[k];
            next[k] += 1;
            rowidx[p] = k;
            values[p] = d.sqrt();
        }

        Ok(SparseCholesky {
            n,
            perm,
            colptr,
            rowidx,
            values,
            input_lower_nnz,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    /// `nnz(R) / nnz(lower(A))`.
    pub fn fill_ratio(&self) -> f64 {
        self.factor_nnz() as f64 / self.input_lower_nnz.max(1) as f64
    }

    /// Column `j` of `R` as (row indices, values); the diagonal comes first.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let span = self.colptr[j]..self.colptr[j + 1];
        (&self.rowidx[span.clone()], &self.values[span])
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for j in 0..self.n {
            let (rows, vals) = self.column(j);
            let yj = y[j] / vals[0];
            y[j] = yj;
            for (&i, &v) in rows[1..].iter().zip(&vals[1..]) {
                y[i] -= v * yj;
            }
        }
        for j in (0..self.n).rev() {
            let (rows, vals) = self.column(j);
            let mut s = y[j];
            for (&i, &v) in rows[1..].iter().zip(&vals[1..]) {
                s -= v * y[i];
            }
            y[j] = s / vals[0];
        }
        for (k, &i) in self.perm.iter().enumerate() {
            b[i] = y[k];
        }
    }

    /// Solves for every column of the row-major `n x k` block `b` in one
    /// pass over the factor.
    pub fn solve_block_in_place(&self, b: &mut [f64], k: usize) {
        assert_eq!(b.len(), self.n * k);
        match k {
            0 => {}
            1 => self.solve_block_fixed::<1>(b),
            2 => self.solve_block_fixed::<2>(b),
            3 => self.solve_block_fixed::<3>(b),
            4 => self.solve_block_fixed::<4>(b),
            _ => {
                let mut lo = 0;
                while lo < k {
                    let width = (k - lo).min(4);
                    let mut part: Vec<f64> = b.chunks_exact(k).flat_map(|r| r[lo..lo + width].iter().copied()).collect();
                    self.solve_block_in_place(&mut part, width);
                    for (r, p) in b.chunks_exact_mut(k).zip(part.chunks_exact(width)) {
                        r[lo..lo + width].copy_from_slice(p);
                    }
                    lo += width;
                }
            }
        }
    }

    fn solve_block_fixed<const K: usize>(&self, b: &mut [f64]) {
        let mut y: Vec<[f64; K]> = self
            .perm
            .iter()
            .map(|&i| std::array::from_fn(|c| b[i * K + c]))
            .collect();
        for j in 0..self.n {
            let (rows, vals) = self.column(j);
            let d = vals[0];
            let yj = y[j].map(|v| v / d);
            y[j] = yj;
            for (&i, &v) in rows[1..].iter().zip(&vals[1..]) {
                let yi = &mut y[i];
                for c in 0..K {
                    yi[c] -= v * yj[c];
                }
            }
        }
        for j in (0..self.n).rev() {
            let (rows, vals) = self.column(j);
            let mut s = y[j];
            for (&i, &v) in rows[1..].iter().zip(&vals[1..]) {
                let yi = &y[i];
                for c in 0..K {
                    s[c] -= v * yi[c];
                }
            }
            let d = vals[0];
            y[j] = s.map(|v| v / d);
        }
        for (src, &i) in y.iter().zip(&self.perm) {
            b[i * K..(i + 1) * K].copy_from_slice(src);
        }
    }

    /// Dense `R` (in permuted coordinates), for verification.
    pub fn dense_factor(&self) -> Vec<Vec<f64>> {
        let mut r = vec![vec![0.0; self.n]; self.n];
        for j in 0..self.n {
            let (rows, vals) = self.column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                r[i][j] = v;
            }
        }
        r
    }
}

fn elimination_tree(lower: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = lower.len();
    let mut parent = vec![usize::MAX; n];
    let mut ancestor = vec![usize::MAX; n];
    for (k, row) in lower.iter().enumerate() {
        for &(j, _) in row {
            let mut i = j;
            while i != usize::MAX && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == usize::MAX {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `R` (excluding the diagonal), ordered so
/// that every node precedes its elimination-tree ancestors.
fn row_pattern(
    k: usize,
    row: &[(usize, f64)],
    parent: &[usize],
    flag: &mut [usize],
    stack: &mut [usize],
) -> usize {
    let mut top = stack.len();
    flag[k] = k;
    for &(j, _) in row {
        let mut i = j;
        let mut len = 0;
        while i < k && flag[i] != k {
            stack[len] = i;
            len += 1;
            flag[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    top
}
