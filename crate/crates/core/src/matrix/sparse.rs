use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Row-compressed sparse matrix.
///
/// Column indices within a row are strictly ascending and explicit zeros are
/// never stored, so `nnz` is the number of structurally nonzero cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

/// Borrowed view of one matrix row.
#[derive(Clone, Copy, Debug)]
pub struct SparseRow<'a, T> {
    pub indices: &'a [usize],
    pub values: &'a [T],
}

impl<'a, T: Copy> SparseRow<'a, T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

pub(crate) fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    Ok(())
}

impl<T: Scalar> SparseMatrix<T> {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_rows(n, n, (0..n).map(|i| vec![(i, T::one())]))
    }

    /// Builds a matrix from per-row entry lists. Each row must have strictly
    /// ascending column indices below `cols`; zero values are dropped.
    pub fn from_rows<I, R>(rows: usize, cols: usize, row_entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = (usize, T)>,
    {
        check_dims(rows, cols)?;
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (i, entries) in row_entries.into_iter().enumerate() {
            if i >= rows {
                return Err(Error::Dimension(format!(
                    "more than {rows} rows supplied"
                )));
            }
            let mut prev: Option<usize> = None;
            for (j, v) in entries {
                if j >= cols {
                    return Err(Error::Dimension(format!(
                        "column {j} out of range in row {i} (cols = {cols})"
                    )));
                }
                if prev.is_some_and(|p| j <= p) {
                    return Err(Error::Dimension(format!(
                        "column indices of row {i} are not strictly ascending at {j}"
                    )));
                }
                prev = Some(j);
                if v != T::zero() {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        while row_ptr.len() < rows + 1 {
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Duplicate coordinates are summed in input order.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        check_dims(rows, cols)?;
        let mut per_row: Vec<Vec<(usize, T)>> = vec![Vec::new(); rows];
        for (i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::Dimension(format!(
                    "triplet ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            per_row[i].push((j, v));
        }
        let merged = per_row.into_iter().map(|mut entries| {
            entries.sort_by_key(|&(j, _)| j);
            let mut out: Vec<(usize, T)> = Vec::with_capacity(entries.len());
            for (j, v) in entries {
                match out.last_mut() {
                    Some((pj, pv)) if *pj == j => *pv += v,
                    _ => out.push((j, v)),
                }
            }
            out
        });
        Self::from_rows(rows, cols, merged)
    }

    pub fn from_dense(dense: &DenseMatrix<T>) -> Self {
        let rows = (0..dense.rows()).map(|i| {
            dense
                .row(i)
                .iter()
                .copied()
                .enumerate()
                .collect::<Vec<_>>()
        });
        Self::from_rows(dense.rows(), dense.cols(), rows)
            .expect("dense matrices always have valid dimensions")
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

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> SparseRow<'_, T> {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        SparseRow {
            indices: &self.col_idx[s..e],
            values: &self.values[s..e],
        }
    }

    pub fn row_iter(&self) -> impl Iterator<Item = SparseRow<'_, T>> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Value at `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let row = self.row(i);
        match row.indices.binary_search(&j) {
            Ok(p) => row.values[p],
            Err(_) => T::zero(),
        }
    }

    /// All stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).iter().map(move |(j, v)| (i, j, v)))
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        // Rows are visited in ascending order, so each transposed row is
        // filled with ascending column indices.
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter() {
                let slot = next[j];
                col_idx[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut out = vec![T::zero(); self.rows * self.cols];
        for (i, j, v) in self.iter() {
            out[i * self.cols + j] = v;
        }
        DenseMatrix::from_vec(self.rows, self.cols, out).expect("shape checked on construction")
    }

    /// Smallest stored value, or `None` for an all-zero matrix.
    pub fn min_value(&self) -> Option<T> {
        self.values.iter().copied().reduce(T::min)
    }

    /// First negative entry, if any.
    pub fn find_negative(&self) -> Option<(usize, usize, T)> {
        self.iter().find(|&(_, _, v)| v < T::zero())
    }

    /// Multiplicative update `self .* numer ./ (denom + eps)`.
    ///
    /// Only cells stored in `self` can be nonzero in the result.
    pub fn elementwise_update(&self, numer: &Self, denom: &Self, eps: T) -> Result<Self> {
        for other in [numer, denom] {
            if other.shape() != self.shape() {
                return Err(Error::shape("elementwise_update", self.shape(), other.shape()));
            }
        }
        let rows = (0..self.rows).map(|i| {
            let (xr, yr) = (numer.row(i), denom.row(i));
            let (mut px, mut py) = (0, 0);
            self.row(i)
                .iter()
                .map(|(j, h)| {
                    let x = lookup_forward(&xr, &mut px, j);
                    let y = lookup_forward(&yr, &mut py, j);
                    (j, h * x / (y + eps))
                })
                .collect::<Vec<_>>()
        });
        Self::from_rows(self.rows, self.cols, rows)
    }
}

// Merge-join cursor: rows are probed with ascending `j`.
fn lookup_forward<T: Scalar>(row: &SparseRow<'_, T>, cursor: &mut usize, j: usize) -> T {
    while *cursor < row.indices.len() && row.indices[*cursor] < j {
        *cursor += 1;
    }
    if *cursor < row.indices.len() && row.indices[*cursor] == j {
        row.values[*cursor]
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> SparseMatrix<f64> {
        let cols = rows[0].len();
        SparseMatrix::from_rows(
            rows.len(),
            cols,
            rows.iter().map(|r| r.iter().copied().enumerate().collect::<Vec<_>>()),
        )
        .unwrap()
    }

    #[test]
    fn zeros_are_dropped() {
        let a = m(&[&[1.0, 0.0], &[0.0, 3.0]]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(1, 1), 3.0);
    }

    #[test]
    fn rejects_descending_and_out_of_range() {
        let bad = SparseMatrix::<f64>::from_rows(2, 3, vec![vec![(2, 1.0), (1, 3.0)], vec![]]);
        assert!(matches!(bad, Err(Error::Dimension(_))));
        let bad = SparseMatrix::<f64>::from_rows(1, 2, vec![vec![(2, 1.0)]]);
        assert!(bad.is_err());
        let bad = SparseMatrix::<f64>::from_rows(1, 3, vec![vec![(1, 1.0), (1, 1.0)]]);
        assert!(bad.is_err());
    }

    #[test]
    fn zero_dimensions_rejected() {
        assert!(SparseMatrix::<f64>::zeros(0, 0).is_err());
        assert!(SparseMatrix::<f64>::zeros(3, 0).is_err());
    }

    #[test]
    fn transpose_hand_case() {
        let a = m(&[&[1.0, 2.0], &[0.0, 3.0]]);
        assert_eq!(a.transpose(), m(&[&[1.0, 0.0], &[2.0, 3.0]]));
    }

    #[test]
    fn transpose_of_symmetric_is_identity_op() {
        let a = m(&[&[2.0, 1.0, 0.0], &[1.0, 0.0, 5.0], &[0.0, 5.0, 4.0]]);
        assert_eq!(a.transpose(), a);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(1, 1, 1.0), (0, 0, 2.0), (1, 1, 0.5)])
            .unwrap();
        assert_eq!(a.get(1, 1), 1.5);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn elementwise_scalar_case() {
        let h = m(&[&[1.0]]);
        let out = h.elementwise_update(&m(&[&[8.0]]), &m(&[&[4.0]]), 0.0).unwrap();
        assert_eq!(out.get(0, 0), 2.0);
    }

    #[test]
    fn elementwise_fixed_point_when_numer_equals_denom() {
        let h = m(&[&[0.3, 0.0, 2.0], &[1.5, 4.0, 0.0]]);
        let x = m(&[&[0.7, 1.0, 3.0], &[2.5, 0.25, 1.0]]);
        let out = h.elementwise_update(&x, &x, 0.0).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn elementwise_guarded_zero_denominator() {
        let h = m(&[&[1.0, 2.0]]);
        let x = m(&[&[3.0, 1.0]]);
        let y = m(&[&[0.0, 1.0]]);
        let out = h.elementwise_update(&x, &y, 1e-12).unwrap();
        assert!(out.get(0, 0).is_finite());
        assert!(out.get(0, 0) > 1e12);
        assert!((out.get(0, 1) - 2.0).abs() < 1e-11);
    }

    #[test]
    fn elementwise_shape_mismatch() {
        let h = m(&[&[1.0, 2.0]]);
        let x = m(&[&[1.0], &[2.0]]);
        assert!(matches!(
            h.elementwise_update(&x, &h, 0.0),
            Err(Error::Shape { .. })
        ));
    }
}
