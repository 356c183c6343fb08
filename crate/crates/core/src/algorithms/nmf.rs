//! Gaussian NMF with multiplicative updates.
//!
//! One step updates `H ← H .* (WᵀA) ./ (WᵀWH)` and then
//! `W ← W .* (AHᵀ) ./ (WHHᵀ)`, which never increases `‖A − WH‖²`.
//! The large products (`WᵀA`, `WᵀW`, `AHᵀ`, `HHᵀ`) run as partition
//! multiplications that never split the rank-`k` dimension; the products
//! with the small `k × k` matrices run as broadcast multiplications. `WᵀWH`
//! is produced transposed, row by row, as `Hᵀ (WᵀW)ᵀ`, because only rows of
//! a row-format matrix are addressable.

use std::time::Duration;

use crate::engine::{timed, JobMetrics};
use crate::error::{Error, Result};
use crate::matmul::{broadcast_multiply, partition_multiply, PartitionSchema, ShardKind};
use crate::matrix::{generate_random, GeneratorParams, SparseMatrix};
use crate::scalar::Scalar;

/// Denominator guard for the multiplicative updates.
pub const DEFAULT_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct NmfState<T> {
    /// `m × k`, nonnegative.
    pub w: SparseMatrix<T>,
    /// `k × n`, nonnegative.
    pub h: SparseMatrix<T>,
    pub k: usize,
    pub divergence_history: Vec<T>,
}

impl<T: Scalar> NmfState<T> {
    pub fn new(w: SparseMatrix<T>, h: SparseMatrix<T>) -> Result<Self> {
        if w.cols() != h.rows() {
            return Err(Error::shape("NmfState::new", w.shape(), h.shape()));
        }
        let k = w.cols();
        if k > w.rows().min(h.cols()) {
            return Err(Error::InvalidArgument(format!(
                "rank {k} exceeds min({}, {})",
                w.rows(),
                h.cols()
            )));
        }
        check_nonnegative("W", &w)?;
        check_nonnegative("H", &h)?;
        Ok(Self {
            w,
            h,
            k,
            divergence_history: Vec::new(),
        })
    }

    /// Dense random factors with entries uniform in (0, 1).
    pub fn random(m: usize, n: usize, k: usize, seed: u64) -> Result<Self> {
        let w = generate_random(&GeneratorParams::new(m, k, 1.0, seed), 1)?;
        let h = generate_random(
            &GeneratorParams::new(k, n, 1.0, seed ^ 0x5a5a_5a5a_5a5a_5a5a),
            1,
        )?;
        Self::new(w, h)
    }
}

fn check_nonnegative<T: Scalar>(name: &'static str, m: &SparseMatrix<T>) -> Result<()> {
    match m.find_negative() {
        Some((row, col, v)) => Err(Error::NegativeEntry {
            matrix: name,
            row,
            col,
            value: v.to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NmfOptions {
    /// Upper bound on the block count of every split dimension.
    pub parts: usize,
    pub shard: ShardKind,
    pub eps: f64,
}

impl NmfOptions {
    pub fn for_workers(workers: usize) -> Self {
        Self {
            parts: workers.max(1),
            shard: ShardKind::Naive,
            eps: DEFAULT_EPS,
        }
    }
}

/// Wall time of the three components of one factor update.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComponentTimings {
    /// `X = WᵀA` (or `AHᵀ`).
    pub numerator: Duration,
    /// `Y = WᵀWH` (or `WHHᵀ`).
    pub denominator: Duration,
    /// `H .* X ./ Y`.
    pub update: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct NmfTimings {
    pub h: ComponentTimings,
    pub w: ComponentTimings,
    pub metrics: Vec<JobMetrics>,
}

/// `‖A − WH‖²`.
pub fn nmf_divergence<T: Scalar>(
    a: &SparseMatrix<T>,
    w: &SparseMatrix<T>,
    h: &SparseMatrix<T>,
) -> Result<T> {
    if w.cols() != h.rows() {
        return Err(Error::shape("nmf_divergence", w.shape(), h.shape()));
    }
    if a.shape() != (w.rows(), h.cols()) {
        return Err(Error::shape("nmf_divergence", a.shape(), (w.rows(), h.cols())));
    }
    let mut total = T::zero();
    let mut recon = vec![T::zero(); a.cols()];
    for i in 0..a.rows() {
        recon.iter_mut().for_each(|v| *v = T::zero());
        for (c, wv) in w.row(i).iter() {
            for (j, hv) in h.row(c).iter() {
                recon[j] += wv * hv;
            }
        }
        let mut arow = a.row(i).iter().peekable();
        for (j, r) in recon.iter().enumerate() {
            let av = match arow.next_if(|&(aj, _)| aj == j) {
                Some((_, v)) => v,
                None => T::zero(),
            };
            let d = av - *r;
            total += d * d;
        }
    }
    Ok(total)
}

fn inner_schema(parts: usize, rows: usize, inner: usize, cols: usize, split_rows: bool, split_cols: bool) -> PartitionSchema {
    PartitionSchema {
        m: if split_rows { parts.min(rows) } else { 1 },
        n: parts.min(inner),
        k: if split_cols { parts.min(cols) } else { 1 },
    }
}

/// Next factor and the timings of its update.
struct Update<T> {
    next: SparseMatrix<T>,
    timings: ComponentTimings,
}

/// Updates `H` given `A` and `W`.
fn update_h<T: Scalar>(
    a: &SparseMatrix<T>,
    w: &SparseMatrix<T>,
    h: &SparseMatrix<T>,
    opts: &NmfOptions,
    workers: usize,
    metrics: &mut Vec<JobMetrics>,
) -> Result<Update<T>> {
    let (m, k, n) = (w.rows(), w.cols(), h.cols());
    let wt = w.transpose();

    let (x, numerator) = timed(|| {
        partition_multiply(&wt, a, inner_schema(opts.parts, k, m, n, false, true), opts.shard, workers)
    });
    let x = x?;
    metrics.extend(x.metrics);

    let (y, denominator) = timed(|| -> Result<SparseMatrix<T>> {
        let c = partition_multiply(&wt, w, inner_schema(opts.parts, k, m, k, false, false), opts.shard, workers)?;
        metrics.extend(c.metrics);
        let ct = c.product.to_dense().transpose();
        let (yt, bm) = broadcast_multiply(&h.transpose(), &ct, workers)?;
        metrics.push(bm);
        Ok(yt.transpose())
    });
    let y = y?;

    let (next, update) = timed(|| h.elementwise_update(&x.product, &y, T::from_f64_lossy(opts.eps)));
    Ok(Update {
        next: next?,
        timings: ComponentTimings {
            numerator,
            denominator,
            update,
        },
    })
}

/// Updates `W` given `A` and the new `H`.
fn update_w<T: Scalar>(
    a: &SparseMatrix<T>,
    w: &SparseMatrix<T>,
    h: &SparseMatrix<T>,
    opts: &NmfOptions,
    workers: usize,
    metrics: &mut Vec<JobMetrics>,
) -> Result<Update<T>> {
    let (m, k, n) = (w.rows(), w.cols(), h.cols());
    let ht = h.transpose();

    let (u, numerator) = timed(|| {
        partition_multiply(a, &ht, inner_schema(opts.parts, m, n, k, true, false), opts.shard, workers)
    });
    let u = u?;
    metrics.extend(u.metrics);

    let (v, denominator) = timed(|| -> Result<SparseMatrix<T>> {
        let d = partition_multiply(h, &ht, inner_schema(opts.parts, k, n, k, false, false), opts.shard, workers)?;
        metrics.extend(d.metrics);
        let (v, bm) = broadcast_multiply(w, &d.product.to_dense(), workers)?;
        metrics.push(bm);
        Ok(v)
    });
    let v = v?;

    let (next, update) = timed(|| w.elementwise_update(&u.product, &v, T::from_f64_lossy(opts.eps)));
    Ok(Update {
        next: next?,
        timings: ComponentTimings {
            numerator,
            denominator,
            update,
        },
    })
}

/// One full update of `H` then `W`; appends the new divergence.
pub fn nmf_step_timed<T: Scalar>(
    a: &SparseMatrix<T>,
    state: &NmfState<T>,
    opts: &NmfOptions,
    workers: usize,
) -> Result<(NmfState<T>, NmfTimings)> {
    if state.w.rows() != a.rows() || state.h.cols() != a.cols() || state.w.cols() != state.h.rows() {
        return Err(Error::shape(
            "nmf_step",
            a.shape(),
            (state.w.rows(), state.h.cols()),
        ));
    }
    check_nonnegative("A", a)?;
    check_nonnegative("W", &state.w)?;
    check_nonnegative("H", &state.h)?;

    let mut metrics = Vec::new();
    let h = update_h(a, &state.w, &state.h, opts, workers, &mut metrics)?;
    let w = update_w(a, &state.w, &h.next, opts, workers, &mut metrics)?;
    let divergence = nmf_divergence(a, &w.next, &h.next)?;
    let mut divergence_history = state.divergence_history.clone();
    divergence_history.push(divergence);
    Ok((
        NmfState {
            w: w.next,
            h: h.next,
            k: state.k,
            divergence_history,
        },
        NmfTimings {
            h: h.timings,
            w: w.timings,
            metrics,
        },
    ))
}

pub fn nmf_step<T: Scalar>(
    a: &SparseMatrix<T>,
    state: &NmfState<T>,
    opts: &NmfOptions,
    workers: usize,
) -> Result<NmfState<T>> {
    nmf_step_timed(a, state, opts, workers).map(|(s, _)| s)
}

/// Runs `iters` steps. When the history is empty the divergence of the
/// starting point is recorded first.
pub fn nmf_run<T: Scalar>(
    a: &SparseMatrix<T>,
    mut state: NmfState<T>,
    iters: usize,
    opts: &NmfOptions,
    workers: usize,
    mut on_step: impl FnMut(usize, &NmfTimings),
) -> Result<NmfState<T>> {
    if state.divergence_history.is_empty() {
        state.divergence_history.push(nmf_divergence(a, &state.w, &state.h)?);
    }
    for it in 0..iters {
        let (next, timings) = nmf_step_timed(a, &state, opts, workers)?;
        on_step(it, &timings);
        state = next;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> SparseMatrix<f64> {
        SparseMatrix::from_rows(1, 1, vec![vec![(0, v)]]).unwrap()
    }

    #[test]
    fn scalar_step() {
        let a = scalar(4.0);
        let state = NmfState::new(scalar(2.0), scalar(1.0)).unwrap();
        let next = nmf_step(&a, &state, &NmfOptions::for_workers(1), 1).unwrap();
        assert!((next.h.get(0, 0) - 2.0).abs() < 1e-12);
        assert!((next.w.get(0, 0) - 2.0).abs() < 1e-12);
        assert!(next.divergence_history[0].abs() < 1e-20);
    }

    #[test]
    fn divergence_cases() {
        assert_eq!(nmf_divergence(&scalar(1.0), &SparseMatrix::zeros(1, 1).unwrap(), &SparseMatrix::zeros(1, 1).unwrap()).unwrap(), 1.0);
        assert_eq!(nmf_divergence(&scalar(6.0), &scalar(2.0), &scalar(3.0)).unwrap(), 0.0);
        assert!(nmf_divergence(&scalar(6.0), &scalar(2.0), &SparseMatrix::zeros(2, 1).unwrap()).is_err());
    }

    #[test]
    fn rejects_negative_input() {
        let state = NmfState::new(scalar(2.0), scalar(1.0)).unwrap();
        assert!(matches!(
            nmf_step(&scalar(-1.0), &state, &NmfOptions::for_workers(1), 1),
            Err(Error::NegativeEntry { matrix: "A", .. })
        ));
        assert!(NmfState::new(scalar(-2.0), scalar(1.0)).is_err());
    }

    #[test]
    fn rank_bound() {
        let w = SparseMatrix::<f64>::zeros(2, 3).unwrap();
        let h = SparseMatrix::<f64>::zeros(3, 5).unwrap();
        assert!(NmfState::new(w, h).is_err());
    }
}
