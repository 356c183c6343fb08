//! Row-wise multiplication against a broadcast operand: `c_i = r_i · B`.
//!
//! `B` is small enough to replicate, so the job is map-only: each worker
//! reads `B` from the broadcast store once and multiplies the rows of `A`
//! it holds. Nothing is shuffled.

use crate::engine::{self, BroadcastStore, JobMetrics, JobSpec, KeyedRecord};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SparseMatrix};
use crate::scalar::Scalar;

/// `A × B` with `B` broadcast; uses a fresh store.
pub fn broadcast_multiply<T: Scalar>(
    a: &SparseMatrix<T>,
    b: &DenseMatrix<T>,
    workers: usize,
) -> Result<(SparseMatrix<T>, JobMetrics)> {
    let mut store = BroadcastStore::new();
    broadcast_multiply_in(&mut store, "broadcast-multiply", a, b, workers)
}

/// `A × B` with `B` published under `name` in `store` for the current epoch.
pub fn broadcast_multiply_in<T: Scalar>(
    store: &mut BroadcastStore,
    name: &str,
    a: &SparseMatrix<T>,
    b: &DenseMatrix<T>,
    workers: usize,
) -> Result<(SparseMatrix<T>, JobMetrics)> {
    if a.cols() != b.rows() {
        return Err(Error::shape("broadcast_multiply", a.shape(), b.shape()));
    }
    if workers == 0 {
        return Err(Error::InvalidArgument("multiply needs at least one worker".into()));
    }
    store.broadcast_value(name, b)?;
    let entry = name.to_string();
    let job = JobSpec::new(format!("broadcast:{name}"), workers, move |ctx, rec, em| {
        let small = ctx.broadcast::<DenseMatrix<T>>(&entry)?;
        let row: Vec<(u64, T)> = rec.decode_value()?;
        let width = small.cols();
        let mut out = vec![T::zero(); width];
        for &(c, v) in &row {
            for (o, &b) in out.iter_mut().zip(small.row(c as usize)) {
                *o += v * b;
            }
        }
        ctx.add_ops((row.len() * width) as u64);
        let entries: Vec<(u64, T)> = out
            .into_iter()
            .enumerate()
            .filter(|&(_, v)| v != T::zero())
            .map(|(j, v)| (j as u64, v))
            .collect();
        if !entries.is_empty() {
            em.emit(rec.key.clone(), crate::engine::codec::encode(&entries));
        }
        Ok(())
    });
    let input: Vec<KeyedRecord> = (0..a.rows())
        .filter(|&i| !a.row(i).is_empty())
        .map(|i| {
            let entries: Vec<(u64, T)> = a.row(i).iter().map(|(j, v)| (j as u64, v)).collect();
            KeyedRecord::encode(&(i as u64), &entries)
        })
        .collect();
    let out = engine::run_job(&job, input, store)?;
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); a.rows()];
    for rec in out.records {
        let i: u64 = rec.decode_key()?;
        let entries: Vec<(u64, T)> = rec.decode_value()?;
        rows[i as usize] = entries.into_iter().map(|(j, v)| (j as usize, v)).collect();
    }
    Ok((SparseMatrix::from_rows(a.rows(), b.cols(), rows)?, out.metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_operand() {
        let a = SparseMatrix::from_rows(2, 3, vec![vec![(0, 1.5), (2, -2.0)], vec![(1, 4.0)]]).unwrap();
        let (c, m) = broadcast_multiply(&a, &DenseMatrix::identity(3).unwrap(), 2).unwrap();
        assert_eq!(c, a);
        assert_eq!(m.shuffle_bytes, 0);
    }

    #[test]
    fn row_dot_column() {
        let a = SparseMatrix::from_rows(1, 2, vec![vec![(0, 1.0), (1, 2.0)]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let (c, m) = broadcast_multiply(&a, &b, 1).unwrap();
        assert_eq!(c.get(0, 0), 11.0);
        assert_eq!(m.scalar_ops, 2);
    }

    #[test]
    fn shape_mismatch_and_duplicate_name() {
        let a = SparseMatrix::<f64>::identity(2).unwrap();
        let b = DenseMatrix::<f64>::identity(3).unwrap();
        assert!(matches!(broadcast_multiply(&a, &b, 1), Err(Error::Shape { .. })));
        let mut store = BroadcastStore::new();
        let b = DenseMatrix::<f64>::identity(2).unwrap();
        broadcast_multiply_in(&mut store, "c", &a, &b, 1).unwrap();
        assert!(matches!(
            broadcast_multiply_in(&mut store, "c", &a, &b, 1),
            Err(Error::DuplicateBroadcast(_))
        ));
    }
}
