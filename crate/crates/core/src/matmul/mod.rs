//! The two multiplicative models: partition-summation block multiplication
//! for large-by-large products and broadcast row-wise multiplication for
//! large-by-small products.

mod broadcast;
mod partition;
mod schema;
mod shard;

pub use broadcast::{broadcast_multiply, broadcast_multiply_in};
pub use partition::{partition_multiply, MultiplyOutput};
pub use schema::{
    block_of, block_range, suggest_schema, suggest_schema_with_budget, BlockKey, PartitionSchema,
    DEFAULT_BLOCK_BUDGET_BYTES,
};
pub use shard::{shard_naive, shard_rand, splitmix64, ShardKind};

/// Metrics CSV header for multiply runs: engine columns plus schema and shard.
pub const MULTIPLY_CSV_HEADER: &str =
    "stage,shuffle_bytes,map_ms,shuffle_ms,reduce_ms,scalar_ops,workers,cross_worker_bytes,schema,shard";

pub fn multiply_csv_rows(
    metrics: &[crate::engine::JobMetrics],
    schema: PartitionSchema,
    shard: ShardKind,
) -> Vec<String> {
    metrics
        .iter()
        .map(|m| format!("{},{schema},{shard}", m.csv_row()))
        .collect()
}
