//! Simplicial sparse Cholesky with a geometric nested-dissection ordering.
//!
//! The factor is computed row by row (up-looking) following the
//! elimination tree, so the pattern of each row is found by walking the
//! tree from the nonzeros of the matrix row.

use super::sparse::CsrMatrix;
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Sets at or below this size are ordered as given.
const LEAF_SIZE: usize = 48;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite {
    pub row: usize,
}

/// `P A P^T = L L^T` with `L` stored by columns, diagonal first.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &CsrMatrix<T>, perm: Vec<usize>) -> Result<Self, NotPositiveDefinite> {
        let n = a.n();
        assert_eq!(perm.len(), n);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        // Upper triangle of the permuted matrix, column k holding rows i <= k.
        let mut up_ptr = vec![0usize; n + 1];
        for (old_r, &k) in inv.iter().enumerate() {
            let (cols, _) = a.row(old_r);
            up_ptr[k + 1] = cols.iter().filter(|&&c| inv[c] <= k).count();
        }
        for k in 0..n {
            up_ptr[k + 1] += up_ptr[k];
        }
        let mut up_rows = vec![0usize; up_ptr[n]];
        let mut up_vals = vec![T::zero(); up_ptr[n]];
        for (old_r, &k) in inv.iter().enumerate() {
            let (cols, vals) = a.row(old_r);
            let mut p = up_ptr[k];
            for (&c, &v) in cols.iter().zip(vals) {
                if inv[c] <= k {
                    up_rows[p] = inv[c];
                    up_vals[p] = v;
                    p += 1;
                }
            }
        }

        let parent = etree(n, &up_ptr, &up_rows);

        // Column counts from the row patterns.
        let mut counts = vec![1usize; n];
        let mut flag = vec![NONE; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &up_rows[up_ptr[k]..up_ptr[k + 1]] {
                let mut i = i0;
                while flag[i] != k {
                    counts[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let nnz = col_ptr[n];
        let mut rows = vec![0usize; nnz];
        let mut values = vec![T::zero(); nnz];
        let mut next: Vec<usize> = col_ptr[..n].to_vec();

        let mut x = vec![T::zero(); n];
        let mut stack = vec![0usize; n];
        flag.fill(NONE);
        for k in 0..n {
            // Pattern of row k of L, in topological order at stack[top..].
            let mut top = n;
            flag[k] = k;
            for &i0 in &up_rows[up_ptr[k]..up_ptr[k + 1]] {
                let mut i = i0;
                let mut len = 0;
                while flag[i] != k {
                    stack[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    stack[top] = stack[len];
                }
            }
            for p in up_ptr[k]..up_ptr[k + 1] {
                x[up_rows[p]] = up_vals[p];
            }
            let mut d = x[k];
            x[k] = T::zero();
            for &i in &stack[top..n] {
                let lki = x[i] / values[col_ptr[i]];
                x[i] = T::zero();
                for p in col_ptr[i] + 1..next[i] {
                    x[rows[p]] = x[rows[p]] - values[p] * lki;
                }
                d = d - lki * lki;
                let p = next[i];
                next[i] += 1;
                rows[p] = k;
                values[p] = lki;
            }
            if !(d > T::zero()) {
                return Err(NotPositiveDefinite { row: perm[k] });
            }
            let p = next[k];
            next[k] += 1;
            rows[p] = k;
            values[p] = d.sqrt();
        }
        Ok(Self { perm, col_ptr, rows, values })
    }

    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T], work: &mut Vec<T>) {
        let n = self.perm.len();
        work.resize(n, T::zero());
        for (w, &old) in work.iter_mut().zip(&self.perm) {
            *w = b[old];
        }
        for j in 0..n {
            let s = self.col_ptr[j];
            let e = self.col_ptr[j + 1];
            let xj = work[j] / self.values[s];
            work[j] = xj;
            for p in s + 1..e {
                let r = self.rows[p];
                work[r] = work[r] - self.values[p] * xj;
            }
        }
        for j in (0..n).rev() {
            let s = self.col_ptr[j];
            let e = self.col_ptr[j + 1];
            let mut acc = work[j];
            for p in s + 1..e {
                acc = acc - self.values[p] * work[self.rows[p]];
            }
            work[j] = acc / self.values[s];
        }
        for (w, &old) in work.iter().zip(&self.perm) {
            b[old] = *w;
        }
    }
}

fn etree(n: usize, up_ptr: &[usize], up_rows: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &i0 in &up_rows[up_ptr[k]..up_ptr[k + 1]] {
            let mut i = i0;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nested-dissection ordering from node coordinates and the matrix graph.
///
/// Each set is split at the median of its longest bounding-box axis; left
/// nodes adjacent to the right half form the separator, which is numbered
/// after both halves.
pub fn nested_dissection<T: Real>(points: &[Vec3<T>], graph: &CsrMatrix<T>) -> Vec<usize> {
    let n = points.len();
    let mut order = Vec::with_capacity(n);
    let mut side = vec![false; n];
    let all: Vec<usize> = (0..n).collect();
    dissect(points, graph, all, &mut side, &mut order);
    debug_assert_eq!(order.len(), n);
    order
}

fn dissect<T: Real>(
    points: &[Vec3<T>],
    graph: &CsrMatrix<T>,
    set: Vec<usize>,
    right_mark: &mut [bool],
    order: &mut Vec<usize>,
) {
    if set.len() <= LEAF_SIZE {
        order.extend(set);
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in &set {
        let p = points[i].to_array();
        for a in 0..3 {
            let v = p[a].to_f64_lossy();
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    }
    let axis = (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap_or(0);
    let coord = |i: usize| points[i].to_array()[axis].to_f64_lossy();
    let mut keys: Vec<f64> = set.iter().map(|&i| coord(i)).collect();
    let mid = keys.len() / 2;
    let (_, &mut median, _) = keys.select_nth_unstable_by(mid, f64::total_cmp);

    let (mut left, mut right): (Vec<usize>, Vec<usize>) = set.iter().partition(|&&i| coord(i) < median);
    if left.is_empty() {
        (left, right) = set.iter().partition(|&&i| coord(i) <= median);
    }
    if left.is_empty() || right.is_empty() {
        order.extend(set);
        return;
    }
    for &i in &right {
        right_mark[i] = true;
    }
    let (sep, left): (Vec<usize>, Vec<usize>) =
        left.into_iter().partition(|&i| graph.row(i).0.iter().any(|&j| right_mark[j]));
    for &i in &right {
        right_mark[i] = false;
    }
    drop(set);
    dissect(points, graph, left, right_mark, order);
    dissect(points, graph, right, right_mark, order);
    order.extend(sep);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let mut pairs = Vec::new();
        for i in 0..n {
            pairs.push((i, i));
            if i + 1 < n {
                pairs.push((i, i + 1));
                pairs.push((i + 1, i));
            }
        }
        let mut a = CsrMatrix::from_pattern(n, pairs);
        for i in 0..n {
            a.add(i, i, 2.5);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
                a.add(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn solves_with_any_permutation() {
        let n = 60;
        let a = laplacian_1d(n);
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&xs, &mut b);
        let perms: Vec<Vec<usize>> = vec![(0..n).collect(), (0..n).rev().collect(), (0..n).map(|i| (i * 7) % n).collect()];
        for perm in perms {
            let f = Cholesky::factor(&a, perm).unwrap();
            let mut x = b.clone();
            f.solve_in_place(&mut x, &mut Vec::new());
            for (u, v) in x.iter().zip(&xs) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = laplacian_1d(3);
        a.add(1, 1, -10.0);
        assert!(Cholesky::factor(&a, vec![0, 1, 2]).is_err());
    }

    #[test]
    fn dissection_is_a_permutation() {
        let n = 500;
        let pts: Vec<Vec3<f64>> = (0..n).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let a = laplacian_1d(n);
        let mut p = nested_dissection(&pts, &a);
        p.sort_unstable();
        assert_eq!(p, (0..n).collect::<Vec<_>>());
    }
}
