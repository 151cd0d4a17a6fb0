//! Compressed sparse row storage with a fixed symmetric pattern.

use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Zero matrix with the pattern of `pairs` (row, col); duplicates are merged.
    pub fn from_pattern(n: usize, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let mut row_ptr = vec![0; n + 1];
        for &(r, _) in &pairs {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols: Vec<usize> = pairs.into_iter().map(|(_, c)| c).collect();
        let values = vec![T::zero(); cols.len()];
        Self { n, row_ptr, cols, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        (&self.cols[s..e], &self.values[s..e])
    }

    /// Position of `(r, c)` in the value array. Panics if outside the pattern.
    fn slot(&self, r: usize, c: usize) -> usize {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        s + self.cols[s..e].binary_search(&c).expect("entry outside sparsity pattern")
    }

    pub fn add(&mut self, r: usize, c: usize, v: T) {
        let k = self.slot(r, c);
        self.values[k] = self.values[k] + v;
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        match self.cols[s..e].binary_search(&c) {
            Ok(k) => self.values[s + k],
            Err(_) => T::zero(),
        }
    }

    /// `a * self + b * other`; both must share the pattern.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        assert_eq!(self.cols, other.cols, "pattern mismatch");
        Self {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            values: self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let (cols, vals) = self.row(r);
            *out = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.n).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).all(|(&c, &v)| (v - self.get(c, r)).abs() <= tol)
        })
    }
}
