//! Partition-summation block matrix multiplication.
//!
//! Job 1 (partition) cuts rows of `A` into inner-dimension segments and rows
//! of `B` into column-block segments, duplicating each `A` segment across all
//! `k` column blocks and each `B` segment across all `m` row blocks, keyed by
//! `⟨α, β, γ⟩`. Its reducer groups the segments of one key into a block pair.
//!
//! Job 2 (summation) multiplies each block pair where it was grouped, emits
//! one partial row per output row, and sums partial rows in ascending `γ`.

use serde::{Deserialize, Serialize};

use crate::engine::{self, codec, BroadcastStore, JobMetrics, JobSpec, KeyedRecord};
use crate::error::{Error, Result};
use crate::matmul::schema::{block_of, block_range, BlockKey, PartitionSchema};
use crate::matmul::shard::ShardKind;
use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

type Entries<T> = Vec<(u64, T)>;

const TAG_A: u8 = 0;
const TAG_B: u8 = 1;

/// One row segment routed to a block group. Variant order makes `A` parts
/// sort ahead of `B` parts, each by ascending row.
#[derive(Serialize, Deserialize)]
enum Part<T> {
    A { row: u64, entries: Entries<T> },
    B { row: u64, entries: Entries<T> },
}

#[derive(Serialize, Deserialize)]
struct BlockGroup<T> {
    a: Vec<(u64, Entries<T>)>,
    b: Vec<(u64, Entries<T>)>,
}

#[derive(Serialize, Deserialize)]
struct Partial<T> {
    gamma: u64,
    beta: u64,
    entries: Entries<T>,
}

#[derive(Clone, Debug)]
pub struct MultiplyOutput<T> {
    pub product: SparseMatrix<T>,
    /// `[partition, summation]`.
    pub metrics: Vec<JobMetrics>,
}

#[derive(Clone, Copy)]
struct Shapes {
    rows_a: usize,
    inner: usize,
    cols_b: usize,
}

fn row_entries<T: Scalar>(m: &SparseMatrix<T>, i: usize) -> Entries<T> {
    m.row(i).iter().map(|(j, v)| (j as u64, v)).collect()
}

/// Splits ascending entries into contiguous runs by `block(col)`.
fn segments<T: Copy>(entries: &[(u64, T)], block: impl Fn(usize) -> usize) -> Vec<(usize, Entries<T>)> {
    let mut out: Vec<(usize, Entries<T>)> = Vec::new();
    for &(j, v) in entries {
        let b = block(j as usize);
        match out.last_mut() {
            Some((pb, seg)) if *pb == b => seg.push((j, v)),
            _ => out.push((b, vec![(j, v)])),
        }
    }
    out
}

fn partition_job<T: Scalar>(
    shapes: Shapes,
    schema: PartitionSchema,
    shard: ShardKind,
    workers: usize,
) -> JobSpec {
    let Shapes {
        rows_a,
        inner,
        cols_b,
    } = shapes;
    let PartitionSchema { m, n, k } = schema;
    JobSpec::new("partition", workers, move |_, rec, em| {
        let (tag, row): (u8, u64) = rec.decode_key()?;
        let entries: Entries<T> = rec.decode_value()?;
        let i = row as usize;
        if tag == TAG_A {
            let alpha = block_of(i, m, rows_a);
            for (gamma, seg) in segments(&entries, |c| block_of(c, n, inner)) {
                let value = codec::encode(&Part::A { row, entries: seg });
                for beta in 0..k {
                    em.emit(codec::encode(&BlockKey::new(alpha, beta, gamma)), value.clone());
                }
            }
        } else {
            let gamma = block_of(i, n, inner);
            for (beta, seg) in segments(&entries, |c| block_of(c, k, cols_b)) {
                let value = codec::encode(&Part::B { row, entries: seg });
                for alpha in 0..m {
                    em.emit(codec::encode(&BlockKey::new(alpha, beta, gamma)), value.clone());
                }
            }
        }
        Ok(())
    })
    .with_shard(move |key, p| match codec::decode::<BlockKey>(key) {
        Ok(bk) => shard.assign(&bk, p),
        Err(_) => 0,
    })
    .with_reducer(|_, key, values, em| {
        let mut group = BlockGroup::<T> {
            a: Vec::new(),
            b: Vec::new(),
        };
        for v in values {
            match codec::decode::<Part<T>>(&v)? {
                Part::A { row, entries } => group.a.push((row, entries)),
                Part::B { row, entries } => group.b.push((row, entries)),
            }
        }
        if !group.a.is_empty() && !group.b.is_empty() {
            em.emit(key.to_vec(), codec::encode(&group));
        }
        Ok(())
    })
}

fn summation_job<T: Scalar>(
    shapes: Shapes,
    schema: PartitionSchema,
    shard: ShardKind,
    workers: usize,
) -> JobSpec {
    let Shapes {
        rows_a, cols_b, ..
    } = shapes;
    let PartitionSchema { m, k, .. } = schema;
    JobSpec::new("summation", workers, move |ctx, rec, em| {
        let key: BlockKey = rec.decode_key()?;
        let group: BlockGroup<T> = rec.decode_value()?;
        let cols = block_range(key.beta as usize, k, cols_b);
        let width = cols.len();
        let mut acc = vec![T::zero(); width];
        let mut touched = vec![false; width];
        let mut hits: Vec<usize> = Vec::new();
        let mut ops = 0u64;
        for (row, a_entries) in &group.a {
            for &(c, a) in a_entries {
                let Ok(pos) = group.b.binary_search_by_key(&c, |(r, _)| *r) else {
                    continue;
                };
                for &(j, b) in &group.b[pos].1 {
                    let slot = j as usize - cols.start;
                    if !touched[slot] {
                        touched[slot] = true;
                        hits.push(slot);
                    }
                    acc[slot] += a * b;
                }
                ops += group.b[pos].1.len() as u64;
            }
            if hits.is_empty() {
                continue;
            }
            hits.sort_unstable();
            let entries: Entries<T> = hits
                .iter()
                .map(|&s| ((cols.start + s) as u64, acc[s]))
                .collect();
            for &s in &hits {
                acc[s] = T::zero();
                touched[s] = false;
            }
            hits.clear();
            em.emit_encoded(
                row,
                &Partial {
                    gamma: key.gamma,
                    beta: key.beta,
                    entries,
                },
            );
        }
        ctx.add_ops(ops);
        Ok(())
    })
    .with_shard(move |key, p| {
        let row = codec::decode::<u64>(key).unwrap_or(0) as usize;
        shard.summation_worker(block_of(row, m, rows_a), row, p)
    })
    .with_reducer(|_, key, values, em| {
        // Values arrive ordered by (gamma, beta); the stable sort keeps that
        // order within each column, fixing the summation order.
        let mut terms: Vec<(u64, T)> = Vec::new();
        for v in values {
            let p: Partial<T> = codec::decode(&v)?;
            terms.extend(p.entries);
        }
        terms.sort_by_key(|&(j, _)| j);
        let mut row: Entries<T> = Vec::new();
        for (j, v) in terms {
            match row.last_mut() {
                Some((pj, pv)) if *pj == j => *pv += v,
                _ => row.push((j, v)),
            }
        }
        row.retain(|&(_, v)| v != T::zero());
        if !row.is_empty() {
            em.emit(key.to_vec(), codec::encode(&row));
        }
        Ok(())
    })
}

fn input_records<T: Scalar>(a: &SparseMatrix<T>, b: &SparseMatrix<T>) -> Vec<KeyedRecord> {
    let mut input = Vec::with_capacity(a.rows() + b.rows());
    for (tag, mat) in [(TAG_A, a), (TAG_B, b)] {
        for i in 0..mat.rows() {
            if !mat.row(i).is_empty() {
                input.push(KeyedRecord::encode(&(tag, i as u64), &row_entries(mat, i)));
            }
        }
    }
    input
}

/// `A × B` through the partition and summation jobs.
pub fn partition_multiply<T: Scalar>(
    a: &SparseMatrix<T>,
    b: &SparseMatrix<T>,
    schema: PartitionSchema,
    shard: ShardKind,
    workers: usize,
) -> Result<MultiplyOutput<T>> {
    if a.cols() != b.rows() {
        return Err(Error::shape("partition_multiply", a.shape(), b.shape()));
    }
    if workers == 0 {
        return Err(Error::InvalidArgument("multiply needs at least one worker".into()));
    }
    schema.validate_for(a.rows(), a.cols(), b.cols())?;
    let shapes = Shapes {
        rows_a: a.rows(),
        inner: a.cols(),
        cols_b: b.cols(),
    };
    let jobs = [
        partition_job::<T>(shapes, schema, shard, workers),
        summation_job::<T>(shapes, schema, shard, workers),
    ];
    let out = engine::chain(&jobs, input_records(a, b), &BroadcastStore::new())?;
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); a.rows()];
    for rec in out.records {
        let i: u64 = rec.decode_key()?;
        let entries: Entries<T> = rec.decode_value()?;
        rows[i as usize] = entries.into_iter().map(|(j, v)| (j as usize, v)).collect();
    }
    Ok(MultiplyOutput {
        product: SparseMatrix::from_rows(a.rows(), b.cols(), rows)?,
        metrics: out.metrics,
    })
}
