use std::time::Duration;

/// Measurements for one map-shuffle-reduce stage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JobMetrics {
    pub stage: String,
    pub workers: usize,
    /// Serialized size of every record emitted by the mappers.
    pub shuffle_bytes: u64,
    /// Part of `shuffle_bytes` whose reduce worker differs from the worker
    /// that emitted it.
    pub cross_worker_bytes: u64,
    pub shuffled_records: u64,
    /// Reduce-input record count per worker.
    pub records_per_worker: Vec<u64>,
    pub map_elapsed: Duration,
    pub shuffle_elapsed: Duration,
    pub reduce_elapsed: Duration,
    /// Multiply-add operations reported by user functions.
    pub scalar_ops: u64,
}

pub const METRICS_CSV_HEADER: &str =
    "stage,shuffle_bytes,map_ms,shuffle_ms,reduce_ms,scalar_ops,workers,cross_worker_bytes";

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

impl JobMetrics {
    pub fn elapsed(&self) -> Duration {
        self.map_elapsed + self.shuffle_elapsed + self.reduce_elapsed
    }

    /// One CSV row in [`METRICS_CSV_HEADER`] column order.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.stage,
            self.shuffle_bytes,
            ms(self.map_elapsed),
            ms(self.shuffle_elapsed),
            ms(self.reduce_elapsed),
            self.scalar_ops,
            self.workers,
            self.cross_worker_bytes
        )
    }
}

/// Sums of a list of stage metrics (ops, bytes, time).
pub fn total_scalar_ops(metrics: &[JobMetrics]) -> u64 {
    metrics.iter().map(|m| m.scalar_ops).sum()
}

pub fn total_elapsed(metrics: &[JobMetrics]) -> Duration {
    metrics.iter().map(JobMetrics::elapsed).sum()
}
