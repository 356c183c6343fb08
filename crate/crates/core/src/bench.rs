//! Scaling experiments over generated operands.
//!
//! A grid cell generates `A` and `B` (both `size × size` at the same
//! density), runs one partition multiplication and records its metrics.
//! Fits are over `scalar_ops`, which does not depend on the machine;
//! elapsed times are reported alongside.

use std::path::PathBuf;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::matmul::{partition_multiply, PartitionSchema, ShardKind};
use crate::matrix::{generate_random, GeneratorParams, SparseMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub deltas: Vec<f64>,
    pub schemas: Vec<PartitionSchema>,
    pub shards: Vec<ShardKind>,
    pub workers: Vec<usize>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: (8..=12).map(|e| 1 << e).collect(),
            deltas: vec![1.0 / 128.0],
            schemas: vec![PartitionSchema::new(4, 2, 4).expect("nonzero counts")],
            shards: vec![ShardKind::Naive],
            workers: vec![1],
            seed: 1,
            out_dir: PathBuf::from("."),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("sizes", self.sizes.is_empty()),
            ("deltas", self.deltas.is_empty()),
            ("schemas", self.schemas.is_empty()),
            ("shards", self.shards.is_empty()),
            ("workers", self.workers.is_empty()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, empty)| *empty) {
            return Err(Error::InvalidArgument(format!("bench grid has no {name}")));
        }
        if self.sizes.contains(&0) || self.workers.contains(&0) {
            return Err(Error::InvalidArgument("sizes and worker counts must be >= 1".into()));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::InvalidArgument(format!("density {d} outside [0, 1]")));
        }
        Ok(())
    }

    /// Number of cells `run_grid` visits.
    pub fn cells(&self) -> usize {
        self.sizes.len() * self.deltas.len() * self.schemas.len() * self.shards.len() * self.workers.len()
    }
}

pub const SCALING_CSV_HEADER: &str = "size,delta,nnz,schema,shard,workers,partition_ms,summation_ms,\
elapsed_ms,shuffle_bytes,cross_worker_bytes,scalar_ops,error";

/// One grid cell. `nnz` counts both operands.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub size: usize,
    pub delta: f64,
    pub nnz: usize,
    pub schema: PartitionSchema,
    pub shard: ShardKind,
    pub workers: usize,
    pub partition_elapsed: Duration,
    pub summation_elapsed: Duration,
    pub shuffle_bytes: u64,
    pub cross_worker_bytes: u64,
    pub scalar_ops: u64,
    /// Set when the cell failed; metrics are then zero.
    pub error: Option<String>,
}

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

impl ScalingRow {
    pub fn elapsed(&self) -> Duration {
        self.partition_elapsed + self.summation_elapsed
    }

    pub fn csv_row(&self) -> String {
        let error = self.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.size,
            self.delta,
            self.nnz,
            self.schema,
            self.shard,
            self.workers,
            ms(self.partition_elapsed),
            ms(self.summation_elapsed),
            ms(self.elapsed()),
            self.shuffle_bytes,
            self.cross_worker_bytes,
            self.scalar_ops,
            error
        )
    }
}

/// Square operands for a cell; `B` uses the next seed.
pub fn bench_operands(
    size: usize,
    delta: f64,
    seed: u64,
    workers: usize,
) -> Result<(SparseMatrix<f64>, SparseMatrix<f64>)> {
    let a = generate_random(&GeneratorParams::new(size, size, delta, seed), workers)?;
    let b = generate_random(&GeneratorParams::new(size, size, delta, seed.wrapping_add(1)), workers)?;
    Ok((a, b))
}

/// Multiplies prepared operands; the schema is clamped to their shape.
pub fn measure_multiply(
    a: &SparseMatrix<f64>,
    b: &SparseMatrix<f64>,
    delta: f64,
    schema: PartitionSchema,
    shard: ShardKind,
    workers: usize,
) -> ScalingRow {
    let schema = schema.clamped(a.rows(), a.cols(), b.cols());
    let mut row = ScalingRow {
        size: a.rows(),
        delta,
        nnz: a.nnz() + b.nnz(),
        schema,
        shard,
        workers,
        partition_elapsed: Duration::ZERO,
        summation_elapsed: Duration::ZERO,
        shuffle_bytes: 0,
        cross_worker_bytes: 0,
        scalar_ops: 0,
        error: None,
    };
    match partition_multiply(a, b, schema, shard, workers) {
        Ok(out) => {
            let [part, sum] = &out.metrics[..] else {
                unreachable!("partition multiply runs two jobs")
            };
            row.partition_elapsed = part.elapsed();
            row.summation_elapsed = sum.elapsed();
            row.shuffle_bytes = part.shuffle_bytes + sum.shuffle_bytes;
            row.cross_worker_bytes = sum.cross_worker_bytes;
            row.scalar_ops = part.scalar_ops + sum.scalar_ops;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Generates operands and measures one cell.
pub fn run_cell(
    size: usize,
    delta: f64,
    schema: PartitionSchema,
    shard: ShardKind,
    workers: usize,
    seed: u64,
) -> ScalingRow {
    match bench_operands(size, delta, seed, workers) {
        Ok((a, b)) => measure_multiply(&a, &b, delta, schema, shard, workers),
        Err(e) => ScalingRow {
            size,
            delta,
            nnz: 0,
            schema,
            shard,
            workers,
            partition_elapsed: Duration::ZERO,
            summation_elapsed: Duration::ZERO,
            shuffle_bytes: 0,
            cross_worker_bytes: 0,
            scalar_ops: 0,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every cell in order, one at a time. Operands are generated once per
/// `(size, delta)` and shared by the cells that use them. A failed cell is
/// recorded and the grid continues.
pub fn run_grid(cfg: &BenchConfig, mut on_row: impl FnMut(&ScalingRow)) -> Result<Vec<ScalingRow>> {
    cfg.validate()?;
    let gen_workers = cfg.workers.iter().copied().max().unwrap_or(1);
    let mut rows = Vec::with_capacity(cfg.cells());
    for &size in &cfg.sizes {
        for &delta in &cfg.deltas {
            let operands = bench_operands(size, delta, cfg.seed, gen_workers);
            for &schema in &cfg.schemas {
                for &shard in &cfg.shards {
                    for &workers in &cfg.workers {
                        let row = match &operands {
                            Ok((a, b)) => measure_multiply(a, b, delta, schema, shard, workers),
                            Err(e) => {
                                let mut r = run_cell(size, delta, schema, shard, workers, cfg.seed);
                                r.error.get_or_insert_with(|| e.to_string());
                                r
                            }
                        };
                        on_row(&row);
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`. `None` with fewer than two
/// distinct positive points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|&(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Pearson correlation. `None` if either side is constant or lengths differ.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

pub const SUMMARY_CSV_HEADER: &str = "fit,fixed,schema,shard,workers,points,value";

/// A fit over one slice of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FitRow {
    /// `ops_slope` (log-log slope of scalar_ops vs size at fixed delta),
    /// `time_slope` (same for elapsed), `nnz_ops_corr` or `nnz_time_corr`
    /// (Pearson over nnz at fixed size).
    pub fit: &'static str,
    /// `delta=..` or `size=..`.
    pub fixed: String,
    pub schema: PartitionSchema,
    pub shard: ShardKind,
    pub workers: usize,
    pub points: usize,
    pub value: f64,
}

impl FitRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.fit, self.fixed, self.schema, self.shard, self.workers, self.points, self.value
        )
    }
}

/// Slopes per fixed delta and correlations per fixed size, over successful
/// cells sharing schema, shard and worker count.
pub fn summarize(rows: &[ScalingRow]) -> Vec<FitRow> {
    let ok: Vec<&ScalingRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let mut slices: Vec<(PartitionSchema, ShardKind, usize)> = Vec::new();
    for r in &ok {
        let key = (r.schema, r.shard, r.workers);
        if !slices.contains(&key) {
            slices.push(key);
        }
    }
    let mut fits = Vec::new();
    let mut push = |fit, fixed: String, sel: &[&ScalingRow], value: Option<f64>| {
        if let Some(value) = value {
            let r = sel[0];
            fits.push(FitRow {
                fit,
                fixed,
                schema: r.schema,
                shard: r.shard,
                workers: r.workers,
                points: sel.len(),
                value,
            });
        }
    };
    for &(schema, shard, workers) in &slices {
        let slice: Vec<&ScalingRow> = ok
            .iter()
            .copied()
            .filter(|r| r.schema == schema && r.shard == shard && r.workers == workers)
            .collect();
        let mut deltas: Vec<f64> = slice.iter().map(|r| r.delta).collect();
        deltas.sort_by(f64::total_cmp);
        deltas.dedup();
        let mut sizes: Vec<usize> = slice.iter().map(|r| r.size).collect();
        sizes.sort_unstable();
        sizes.dedup();
        for d in deltas {
            let sel: Vec<&ScalingRow> = slice.iter().copied().filter(|r| r.delta == d).collect();
            let xs: Vec<f64> = sel.iter().map(|r| r.size as f64).collect();
            let ops: Vec<f64> = sel.iter().map(|r| r.scalar_ops as f64).collect();
            let time: Vec<f64> = sel.iter().map(|r| r.elapsed().as_secs_f64()).collect();
            push("ops_slope", format!("delta={d}"), &sel, loglog_slope(&xs, &ops));
            push("time_slope", format!("delta={d}"), &sel, loglog_slope(&xs, &time));
        }
        for s in sizes {
            let sel: Vec<&ScalingRow> = slice.iter().copied().filter(|r| r.size == s).collect();
            let nnz: Vec<f64> = sel.iter().map(|r| r.nnz as f64).collect();
            let ops: Vec<f64> = sel.iter().map(|r| r.scalar_ops as f64).collect();
            let time: Vec<f64> = sel.iter().map(|r| r.elapsed().as_secs_f64()).collect();
            push("nnz_ops_corr", format!("size={s}"), &sel, pearson(&nnz, &ops));
            push("nnz_time_corr", format!("size={s}"), &sel, pearson(&nnz, &time));
        }
    }
    fits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = (1..6).map(|e| 2f64.powi(e)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[1.0], &[1.0]), None);
        assert_eq!(loglog_slope(&[2.0, 2.0], &[1.0, 3.0]), None);
    }

    #[test]
    fn pearson_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn config_validation() {
        assert!(BenchConfig::default().validate().is_ok());
        let cfg = BenchConfig {
            deltas: vec![],
            ..BenchConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = BenchConfig {
            deltas: vec![2.0],
            ..BenchConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn small_grid_runs_and_summarizes() {
        let cfg = BenchConfig {
            sizes: vec![16, 32, 64],
            deltas: vec![0.25, 0.5],
            schemas: vec![PartitionSchema::new(2, 2, 2).unwrap()],
            workers: vec![2],
            ..BenchConfig::default()
        };
        let mut seen = 0;
        let rows = run_grid(&cfg, |_| seen += 1).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(seen, 6);
        assert!(rows.iter().all(|r| r.error.is_none() && r.scalar_ops > 0));
        let fits = summarize(&rows);
        assert_eq!(fits.iter().filter(|f| f.fit == "ops_slope").count(), 2);
        assert_eq!(fits.iter().filter(|f| f.fit == "nnz_ops_corr").count(), 3);
        assert_eq!(rows[0].csv_row().split(',').count(), SCALING_CSV_HEADER.split(',').count());
    }
}
