use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense-stored square matrix with cached per-line nonzero counts.
///
/// Entries are row-major. `row_counts[i]` and `col_counts[j]` always equal the
/// number of nonzero entries in row `i` / column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    n: usize,
    data: Vec<T>,
    row_counts: Vec<u32>,
    col_counts: Vec<u32>,
}

pub type IntMatrix = SparseMatrix<i128>;
pub type ComplexMatrix = SparseMatrix<Complex64>;

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
            row_counts: vec![0; n],
            col_counts: vec![0; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds a matrix from row-major data of length `n * n`.
    pub fn from_vec(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Invalid(format!(
                "expected {} entries for order {n}, got {}",
                n * n,
                data.len()
            )));
        }
        let mut row_counts = vec![0u32; n];
        let mut col_counts = vec![0u32; n];
        for i in 0..n {
            for j in 0..n {
                if !data[i * n + j].is_zero() {
                    row_counts[i] += 1;
                    col_counts[j] += 1;
                }
            }
        }
        Ok(Self {
            n,
            data,
            row_counts,
            col_counts,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NonSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::from_vec(n, rows.iter().flatten().copied().collect())
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self::from_vec(n, data).expect("length matches by construction")
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let slot = &mut self.data[i * self.n + j];
        match (slot.is_zero(), v.is_zero()) {
            (true, false) => {
                self.row_counts[i] += 1;
                self.col_counts[j] += 1;
            }
            (false, true) => {
                self.row_counts[i] -= 1;
                self.col_counts[j] -= 1;
            }
            _ => {}
        }
        *slot = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_counts(&self) -> &[u32] {
        &self.row_counts
    }

    pub fn col_counts(&self) -> &[u32] {
        &self.col_counts
    }

    pub fn nnz(&self) -> usize {
        self.row_counts.iter().map(|&c| c as usize).sum()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                data.push(self.get(i, j));
            }
        }
        Self {
            n,
            data,
            row_counts: self.col_counts.clone(),
            col_counts: self.row_counts.clone(),
        }
    }

    /// 0-1 integer matrix with the same support.
    pub fn pattern(&self) -> IntMatrix {
        SparseMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .map(|v| if v.is_zero() { 0 } else { 1 })
                .collect(),
            row_counts: self.row_counts.clone(),
            col_counts: self.col_counts.clone(),
        }
    }

    pub fn has_zero_line(&self) -> bool {
        self.row_counts.contains(&0) || self.col_counts.contains(&0)
    }

    /// Multiplies row `i` by `c`.
    pub fn scale_row(&mut self, i: usize, c: T) -> Result<()> {
        for j in 0..self.n {
            let v = self.get(i, j).mul(c)?;
            self.set(i, j, v);
        }
        Ok(())
    }

    pub fn scale_col(&mut self, j: usize, c: T) -> Result<()> {
        for i in 0..self.n {
            let v = self.get(i, j).mul(c)?;
            self.set(i, j, v);
        }
        Ok(())
    }

    /// Rows and columns of `self` restricted to the first `k` indices.
    pub fn leading_principal(&self, k: usize) -> Self {
        Self::from_fn(k, |i, j| self.get(i, j))
    }

    /// Upper bound on |per(A)|: the smaller of the products of absolute row
    /// sums and absolute column sums.
    pub fn permanent_bound(&self) -> f64 {
        let n = self.n;
        let mut rows = vec![0.0f64; n];
        let mut cols = vec![0.0f64; n];
        for i in 0..n {
            for j in 0..n {
                let a = self.get(i, j).abs_f64();
                rows[i] += a;
                cols[j] += a;
            }
        }
        let r: f64 = rows.iter().product();
        let c: f64 = cols.iter().product();
        r.min(c)
    }
}

impl ComplexMatrix {
    /// `x * I - A` for an integer matrix `A`.
    pub fn shifted_negation(a: &IntMatrix, x: Complex64) -> Self {
        Self::from_fn(a.order(), |i, j| {
            let base = Complex64::new(-(a.get(i, j) as f64), 0.0);
            if i == j {
                base + x
            } else {
                base
            }
        })
    }
}

impl IntMatrix {
    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n, |i, j| Complex64::new(self.get(i, j) as f64, 0.0))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i128]]) -> IntMatrix {
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn counts_follow_mutation() {
        let mut a = IntMatrix::zeros(3);
        a.set(0, 1, 5);
        a.set(2, 1, -2);
        assert_eq!(a.row_counts(), &[1, 0, 1]);
        assert_eq!(a.col_counts(), &[0, 2, 0]);
        a.set(0, 1, 0);
        assert_eq!(a.row_counts(), &[0, 0, 1]);
        assert_eq!(a.col_counts(), &[0, 1, 0]);
        assert_eq!(a.nnz(), 1);
    }

    #[test]
    fn pattern_erases_sign_and_magnitude() {
        let a = m(&[&[0, 5], &[-2, 0]]);
        assert_eq!(a.pattern(), m(&[&[0, 1], &[1, 0]]));
        assert_eq!(a.pattern().pattern(), a.pattern());
    }

    #[test]
    fn pattern_of_shifted_negation_adds_diagonal() {
        let a = m(&[&[0, 1, 1], &[1, 0, 0], &[1, 0, 0]]);
        let b = ComplexMatrix::shifted_negation(&a, Complex64::new(0.3, -0.2));
        let expected = IntMatrix::from_fn(3, |i, j| if i == j { 1 } else { a.get(i, j) });
        assert_eq!(b.pattern(), expected);
    }

    #[test]
    fn transpose_swaps_counts() {
        let a = m(&[&[1, 1, 1], &[0, 0, 1], &[0, 0, 0]]);
        let t = a.transpose();
        assert_eq!(t.row_counts(), a.col_counts());
        assert_eq!(t.col_counts(), a.row_counts());
        assert_eq!(t.get(2, 1), 1);
        assert!(a.has_zero_line());
    }

    #[test]
    fn non_square_rows_rejected() {
        let err = IntMatrix::from_rows(&[vec![1, 0], vec![1]]).unwrap_err();
        assert!(matches!(err, Error::NonSquare { .. }));
    }
}
