//! Local multi-worker MapReduce runtime.
//!
//! Jobs run on a fixed pool of worker threads. Map tasks run where their
//! input lives, emitted records are routed by a shard function, and each
//! worker reduces its key groups in ascending byte order with the values of
//! a group sorted by bytes. Output is therefore independent of the number
//! of workers. The only cross-task channels are the shuffle, the
//! [`BroadcastStore`] and the scalar-op accumulator in [`TaskContext`].

mod broadcast;
pub mod codec;
mod job;
mod metrics;

pub use broadcast::BroadcastStore;
pub use job::{
    canonical, chain, hash_shard, run_job, run_partitioned, split_even, timed, ChainOutput, Emitter,
    JobOutput, JobSpec, KeyedRecord, MapFn, Partitions, ReduceFn, ShardFn, TaskContext,
};
pub use metrics::{total_elapsed, total_scalar_ops, JobMetrics, METRICS_CSV_HEADER};
