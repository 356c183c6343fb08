use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::sparse::check_dims;
use crate::scalar::Scalar;

/// Row-major dense matrix, used for small operands such as `WᵀW`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            values: vec![T::zero(); rows * cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.values[i * n + i] = T::one();
        }
        Ok(m)
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        check_dims(rows, cols)?;
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        let mut out = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            values: out,
        }
    }

    /// Multiplicative update `self .* numer ./ (denom + eps)`.
    pub fn elementwise_update(&self, numer: &Self, denom: &Self, eps: T) -> Result<Self> {
        for other in [numer, denom] {
            if other.shape() != self.shape() {
                return Err(Error::shape("elementwise_update", self.shape(), other.shape()));
            }
        }
        let values = self
            .values
            .iter()
            .zip(&numer.values)
            .zip(&denom.values)
            .map(|((&h, &x), &y)| h * x / (y + eps))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            values,
        })
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.values[i * self.cols + j]
    }
}

/// Dense real vector (α, y, π, ...).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> DenseVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_elem(len, T::zero())
    }

    pub fn from_elem(len: usize, v: T) -> Self {
        Self {
            values: vec![v; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + '_ {
        self.values.iter().copied()
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    /// `len × 1` column matrix.
    pub fn to_column(&self) -> Result<DenseMatrix<T>> {
        DenseMatrix::from_vec(self.values.len(), 1, self.values.clone())
    }
}

impl<T> Index<usize> for DenseVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

impl<T> FromIterator<T> for DenseVector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_and_index() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let t = a.transpose();
        assert_eq!(t.shape(), (3, 2));
        assert_eq!(t[(2, 1)], 6.0);
        assert_eq!(t.transpose(), a);
    }

    #[test]
    fn elementwise_update_dense() {
        let h = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let x = DenseMatrix::from_rows(&[vec![8.0, 3.0]]).unwrap();
        let y = DenseMatrix::from_rows(&[vec![4.0, 3.0]]).unwrap();
        let out = h.elementwise_update(&x, &y, 0.0).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 2.0]);
        let bad = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(h.elementwise_update(&bad, &y, 0.0).is_err());
    }

    #[test]
    fn value_count_checked() {
        assert!(DenseMatrix::<f64>::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::<f64>::zeros(0, 1).is_err());
    }
}
