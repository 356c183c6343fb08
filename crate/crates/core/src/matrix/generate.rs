//! Parallel random sparse matrix generator.
//!
//! Runs as one engine job: the mapper emits a row index per row, rows are
//! sharded round-robin across workers, and the reducer fills each row. Every
//! cell is nonzero with probability `delta`, with a value uniform in (0, 1).
//! Each row draws from its own ChaCha stream keyed by `(seed, row)`, so the
//! matrix depends only on the parameters, never on the worker count.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{self, codec, BroadcastStore, JobSpec, KeyedRecord};
use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub rows: usize,
    pub cols: usize,
    /// Fraction of nonzero cells, in `[0, 1]`.
    pub delta: f64,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn new(rows: usize, cols: usize, delta: f64, seed: u64) -> Self {
        Self {
            rows,
            cols,
            delta,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "generator needs positive dimensions, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidArgument(format!(
                "sparsity {} outside [0, 1]",
                self.delta
            )));
        }
        Ok(())
    }
}

/// RNG for one row; identical for any worker layout.
pub fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

/// Fills one row: each of `cols` cells is kept with probability `delta`.
pub fn generate_row(p: &GeneratorParams, row: usize) -> Vec<(usize, f64)> {
    let mut rng = row_rng(p.seed, row);
    let mut out = Vec::new();
    for j in 0..p.cols {
        if rng.gen::<f64>() < p.delta {
            out.push((j, rng.sample::<f64, _>(Open01)));
        }
    }
    out
}

pub fn generate_random<T: Scalar>(p: &GeneratorParams, workers: usize) -> Result<SparseMatrix<T>> {
    p.validate()?;
    if workers == 0 {
        return Err(Error::InvalidArgument("generator needs at least one worker".into()));
    }
    let params = *p;
    let job = JobSpec::new("generate", workers, |_, rec, em| {
        em.emit(rec.key.clone(), Vec::new());
        Ok(())
    })
    .with_shard(|key, workers| {
        let row: u64 = codec::decode(key).unwrap_or(0);
        (row % workers as u64) as usize
    })
    .with_reducer(move |_, key, _, em| {
        let row: u64 = codec::decode(key)?;
        em.emit(key.to_vec(), codec::encode(&generate_row(&params, row as usize)));
        Ok(())
    });
    let input = (0..p.rows as u64)
        .map(|i| KeyedRecord::encode(&i, &()))
        .collect();
    let out = engine::run_job(&job, input, &BroadcastStore::new())?;
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); p.rows];
    for rec in out.records {
        let i: u64 = rec.decode_key()?;
        let entries: Vec<(usize, f64)> = rec.decode_value()?;
        rows[i as usize] = entries
            .into_iter()
            .map(|(j, v)| (j, T::from_f64_lossy(v)))
            .collect();
    }
    SparseMatrix::from_rows(p.rows, p.cols, rows)
}
