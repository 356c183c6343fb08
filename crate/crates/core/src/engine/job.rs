use std::any::Any;
use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::engine::broadcast::BroadcastStore;
use crate::engine::codec;
use crate::engine::metrics::JobMetrics;
use crate::error::{Error, Result};

/// An opaque key/value pair. Keys are compared as bytes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyedRecord {
    pub key: Vec<u8>,
    pub value: Vec<u8>,
}

impl KeyedRecord {
    pub fn new(key: Vec<u8>, value: Vec<u8>) -> Self {
        Self { key, value }
    }

    pub fn encode<K: Serialize + ?Sized, V: Serialize + ?Sized>(key: &K, value: &V) -> Self {
        Self::new(codec::encode(key), codec::encode(value))
    }

    pub fn decode_key<K: DeserializeOwned>(&self) -> Result<K> {
        codec::decode(&self.key)
    }

    pub fn decode_value<V: DeserializeOwned>(&self) -> Result<V> {
        codec::decode(&self.value)
    }

    pub fn wire_len(&self) -> u64 {
        (self.key.len() + self.value.len()) as u64
    }
}

/// Per-task view handed to user functions: worker identity, broadcast
/// payloads and the scalar-op accumulator.
pub struct TaskContext<'a> {
    stage: &'a str,
    worker: usize,
    workers: usize,
    store: &'a BroadcastStore,
    ops: Cell<u64>,
    cache: RefCell<HashMap<String, Rc<dyn Any>>>,
}

impl<'a> TaskContext<'a> {
    fn new(stage: &'a str, worker: usize, workers: usize, store: &'a BroadcastStore) -> Self {
        Self {
            stage,
            worker,
            workers,
            store,
            ops: Cell::new(0),
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn stage(&self) -> &str {
        self.stage
    }

    pub fn worker(&self) -> usize {
        self.worker
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn add_ops(&self, n: u64) {
        self.ops.set(self.ops.get() + n);
    }

    pub fn broadcast_bytes(&self, name: &str) -> Result<&'a [u8]> {
        self.store
            .get(name)
            .ok_or_else(|| Error::MissingBroadcast(name.to_string()))
    }

    /// Decoded broadcast payload. Decoding happens once per task.
    pub fn broadcast<T: DeserializeOwned + 'static>(&self, name: &str) -> Result<Rc<T>> {
        if let Some(hit) = self.cache.borrow().get(name) {
            if let Ok(v) = Rc::clone(hit).downcast::<T>() {
                return Ok(v);
            }
        }
        let v: Rc<T> = Rc::new(codec::decode(self.broadcast_bytes(name)?)?);
        self.cache
            .borrow_mut()
            .insert(name.to_string(), v.clone() as Rc<dyn Any>);
        Ok(v)
    }
}

/// Collects records emitted by a map or reduce call.
#[derive(Default)]
pub struct Emitter {
    records: Vec<KeyedRecord>,
}

impl Emitter {
    pub fn emit(&mut self, key: Vec<u8>, value: Vec<u8>) {
        self.records.push(KeyedRecord { key, value });
    }

    pub fn emit_encoded<K: Serialize + ?Sized, V: Serialize + ?Sized>(&mut self, key: &K, value: &V) {
        self.records.push(KeyedRecord::encode(key, value));
    }

    pub fn emit_record(&mut self, record: KeyedRecord) {
        self.records.push(record);
    }
}

pub type MapFn = Arc<dyn Fn(&TaskContext<'_>, &KeyedRecord, &mut Emitter) -> Result<()> + Send + Sync>;
pub type ReduceFn =
    Arc<dyn Fn(&TaskContext<'_>, &[u8], Vec<Vec<u8>>, &mut Emitter) -> Result<()> + Send + Sync>;
pub type ShardFn = Arc<dyn Fn(&[u8], usize) -> usize + Send + Sync>;

/// FNV-1a over the key bytes, modulo `workers`.
pub fn hash_shard(key: &[u8], workers: usize) -> usize {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in key {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    (h % workers as u64) as usize
}

/// One map-shuffle-reduce stage.
///
/// A job without a reducer is map-only: mapper output stays on the worker
/// that produced it and nothing is shuffled.
#[derive(Clone)]
pub struct JobSpec {
    pub name: String,
    pub workers: usize,
    pub mapper: MapFn,
    pub reducer: Option<ReduceFn>,
    pub shard: ShardFn,
}

impl fmt::Debug for JobSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JobSpec")
            .field("name", &self.name)
            .field("workers", &self.workers)
            .field("map_only", &self.reducer.is_none())
            .finish()
    }
}

impl JobSpec {
    pub fn new<M>(name: impl Into<String>, workers: usize, mapper: M) -> Self
    where
        M: Fn(&TaskContext<'_>, &KeyedRecord, &mut Emitter) -> Result<()> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            workers,
            mapper: Arc::new(mapper),
            reducer: None,
            shard: Arc::new(hash_shard),
        }
    }

    pub fn with_reducer<R>(mut self, reducer: R) -> Self
    where
        R: Fn(&TaskContext<'_>, &[u8], Vec<Vec<u8>>, &mut Emitter) -> Result<()>
            + Send
            + Sync
            + 'static,
    {
        self.reducer = Some(Arc::new(reducer));
        self
    }

    pub fn with_shard<S>(mut self, shard: S) -> Self
    where
        S: Fn(&[u8], usize) -> usize + Send + Sync + 'static,
    {
        self.shard = Arc::new(shard);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidArgument(format!(
                "job `{}` needs at least one worker",
                self.name
            )));
        }
        Ok(())
    }
}

/// Records of one job's output, held per worker.
pub type Partitions = Vec<Vec<KeyedRecord>>;

/// Splits records into `workers` contiguous, near-equal chunks.
pub fn split_even(records: Vec<KeyedRecord>, workers: usize) -> Partitions {
    let workers = workers.max(1);
    let total = records.len();
    let mut parts: Partitions = (0..workers).map(|_| Vec::new()).collect();
    for (idx, r) in records.into_iter().enumerate() {
        parts[idx * workers / total.max(1)].push(r);
    }
    parts
}

/// Flattens partitions into the canonical order: ascending key, then value.
pub fn canonical(parts: Partitions) -> Vec<KeyedRecord> {
    let mut all: Vec<KeyedRecord> = parts.into_iter().flatten().collect();
    all.sort_unstable();
    all
}

#[derive(Debug)]
pub struct JobOutput {
    pub records: Vec<KeyedRecord>,
    pub metrics: JobMetrics,
}

#[derive(Debug)]
pub struct ChainOutput {
    pub records: Vec<KeyedRecord>,
    pub metrics: Vec<JobMetrics>,
}

fn task_error(stage: &str, key: &[u8], e: Error) -> Error {
    match e {
        Error::Task { .. } => e,
        other => Error::Task {
            stage: stage.to_string(),
            key: key.to_vec(),
            message: other.to_string(),
        },
    }
}

struct MapResult {
    /// Outgoing buckets indexed by destination worker.
    buckets: Vec<Vec<KeyedRecord>>,
    ops: u64,
}

/// Runs one job with its input split evenly across the workers.
pub fn run_job(spec: &JobSpec, input: Vec<KeyedRecord>, store: &BroadcastStore) -> Result<JobOutput> {
    let parts = split_even(input, spec.workers);
    let (out, metrics) = run_partitioned(spec, parts, store)?;
    Ok(JobOutput {
        records: canonical(out),
        metrics,
    })
}

/// Runs jobs in sequence; each job's per-worker output is the next job's
/// per-worker input, so a map task runs where its input was produced.
pub fn chain(jobs: &[JobSpec], input: Vec<KeyedRecord>, store: &BroadcastStore) -> Result<ChainOutput> {
    let first = jobs
        .first()
        .ok_or_else(|| Error::InvalidArgument("chain needs at least one job".into()))?;
    let mut parts = split_even(input, first.workers);
    let mut metrics = Vec::with_capacity(jobs.len());
    for job in jobs {
        if parts.len() != job.workers {
            parts = split_even(parts.into_iter().flatten().collect(), job.workers);
        }
        let (out, m) = run_partitioned(job, parts, store)?;
        parts = out;
        metrics.push(m);
    }
    Ok(ChainOutput {
        records: canonical(parts),
        metrics,
    })
}

/// Runs one job over pre-placed input: `input[w]` is mapped on worker `w`.
/// Returns the output held by each worker.
pub fn run_partitioned(
    spec: &JobSpec,
    input: Partitions,
    store: &BroadcastStore,
) -> Result<(Partitions, JobMetrics)> {
    spec.validate()?;
    let p = spec.workers;
    let input = if input.len() == p {
        input
    } else {
        split_even(input.into_iter().flatten().collect(), p)
    };
    let stage = spec.name.as_str();
    let map_only = spec.reducer.is_none();

    // Map: every task finishes before any shuffling starts.
    let t0 = Instant::now();
    let mapped: Vec<Result<MapResult>> = thread::scope(|s| {
        let handles: Vec<_> = input
            .into_iter()
            .enumerate()
            .map(|(w, part)| {
                s.spawn(move || -> Result<MapResult> {
                    let ctx = TaskContext::new(stage, w, p, store);
                    let mut em = Emitter::default();
                    for rec in &part {
                        (spec.mapper)(&ctx, rec, &mut em)
                            .map_err(|e| task_error(stage, &rec.key, e))?;
                    }
                    let ops = ctx.ops.get();
                    if map_only {
                        let mut buckets: Vec<Vec<KeyedRecord>> = (0..p).map(|_| Vec::new()).collect();
                        buckets[w] = em.records;
                        return Ok(MapResult { buckets, ops });
                    }
                    let mut buckets: Vec<Vec<KeyedRecord>> = (0..p).map(|_| Vec::new()).collect();
                    for r in em.records {
                        let dest = (spec.shard)(&r.key, p);
                        if dest >= p {
                            return Err(Error::Invariant(format!(
                                "shard function of `{stage}` returned {dest} for {p} workers"
                            )));
                        }
                        buckets[dest].push(r);
                    }
                    Ok(MapResult { buckets, ops })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("map task panicked"))
            .collect()
    });
    let mut map_results = Vec::with_capacity(p);
    for r in mapped {
        map_results.push(r?);
    }
    let map_elapsed = t0.elapsed();
    let mut scalar_ops: u64 = map_results.iter().map(|m| m.ops).sum();

    if map_only {
        let out: Partitions = map_results
            .into_iter()
            .enumerate()
            .map(|(w, mut m)| std::mem::take(&mut m.buckets[w]))
            .collect();
        let metrics = JobMetrics {
            stage: stage.to_string(),
            workers: p,
            records_per_worker: vec![0; p],
            map_elapsed,
            scalar_ops,
            ..Default::default()
        };
        return Ok((out, metrics));
    }

    // Shuffle: gather each destination's buckets and sort by (key, value).
    let t1 = Instant::now();
    let mut shuffle_bytes = 0u64;
    let mut cross_worker_bytes = 0u64;
    let mut inboxes: Vec<Vec<KeyedRecord>> = (0..p).map(|_| Vec::new()).collect();
    for (src, m) in map_results.into_iter().enumerate() {
        for (dest, bucket) in m.buckets.into_iter().enumerate() {
            let bytes: u64 = bucket.iter().map(KeyedRecord::wire_len).sum();
            shuffle_bytes += bytes;
            if src != dest {
                cross_worker_bytes += bytes;
            }
            inboxes[dest].extend(bucket);
        }
    }
    let records_per_worker: Vec<u64> = inboxes.iter().map(|b| b.len() as u64).collect();
    let inboxes: Vec<Vec<KeyedRecord>> = thread::scope(|s| {
        let handles: Vec<_> = inboxes
            .into_iter()
            .map(|mut inbox| {
                s.spawn(move || {
                    inbox.sort_unstable();
                    inbox
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sort task panicked"))
            .collect()
    });
    let shuffle_elapsed = t1.elapsed();

    // Reduce: one task per worker, key groups in ascending order.
    let reducer = spec.reducer.as_ref().expect("checked above");
    let t2 = Instant::now();
    let reduced: Vec<Result<(Vec<KeyedRecord>, u64)>> = thread::scope(|s| {
        let handles: Vec<_> = inboxes
            .into_iter()
            .enumerate()
            .map(|(w, inbox)| {
                s.spawn(move || -> Result<(Vec<KeyedRecord>, u64)> {
                    let ctx = TaskContext::new(stage, w, p, store);
                    let mut em = Emitter::default();
                    let mut it = inbox.into_iter().peekable();
                    while let Some(first) = it.next() {
                        let key = first.key;
                        let mut values = vec![first.value];
                        while let Some(next) = it.next_if(|r| r.key == key) {
                            values.push(next.value);
                        }
                        reducer(&ctx, &key, values, &mut em)
                            .map_err(|e| task_error(stage, &key, e))?;
                    }
                    Ok((em.records, ctx.ops.get()))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("reduce task panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(p);
    for r in reduced {
        let (records, ops) = r?;
        scalar_ops += ops;
        out.push(records);
    }
    let reduce_elapsed = t2.elapsed();

    let shuffled_records = records_per_worker.iter().sum();
    let metrics = JobMetrics {
        stage: stage.to_string(),
        workers: p,
        shuffle_bytes,
        cross_worker_bytes,
        shuffled_records,
        records_per_worker,
        map_elapsed,
        shuffle_elapsed,
        reduce_elapsed,
        scalar_ops,
    };
    Ok((out, metrics))
}

/// Wall time of `f`, for callers that time several jobs as one component.
pub fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}
