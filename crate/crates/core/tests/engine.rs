use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use mrmul::engine::{
    chain, codec, hash_shard, run_job, run_partitioned, BroadcastStore, JobSpec, KeyedRecord,
};
use mrmul::Error;
use proptest::prelude::*;

fn words(text: &str) -> Vec<KeyedRecord> {
    text.lines()
        .enumerate()
        .map(|(i, l)| KeyedRecord::encode(&(i as u64), l))
        .collect()
}

fn word_count(workers: usize) -> JobSpec {
    JobSpec::new("count", workers, |_, rec, em| {
        let line: String = rec.decode_value()?;
        for w in line.split_whitespace() {
            em.emit_encoded(w, &1u64);
        }
        Ok(())
    })
    .with_reducer(|_, key, values, em| {
        let total: u64 = values.iter().map(|v| codec::decode::<u64>(v)).sum::<mrmul::Result<u64>>()?;
        em.emit(key.to_vec(), codec::encode(&total));
        Ok(())
    })
}

fn counts(records: &[KeyedRecord]) -> Vec<(String, u64)> {
    records
        .iter()
        .map(|r| (r.decode_key().unwrap(), r.decode_value().unwrap()))
        .collect()
}

const TEXT: &str = "a b c a\nb b d\n\nc a e f g\na";

#[test]
fn word_count_is_correct_and_worker_invariant() {
    let store = BroadcastStore::new();
    let base = run_job(&word_count(1), words(TEXT), &store).unwrap();
    let got = counts(&base.records);
    let want: Vec<(String, u64)> = [("a", 4), ("b", 3), ("c", 2), ("d", 1), ("e", 1), ("f", 1), ("g", 1)]
        .iter()
        .map(|&(w, n)| (w.to_string(), n))
        .collect();
    assert_eq!(got, want);
    for workers in [2, 3, 8, 16] {
        let out = run_job(&word_count(workers), words(TEXT), &store).unwrap();
        assert_eq!(out.records, base.records);
        assert_eq!(out.metrics.shuffle_bytes, base.metrics.shuffle_bytes);
        assert_eq!(out.metrics.shuffled_records, 13);
    }
}

#[test]
fn reducers_run_where_the_shard_function_points() {
    let spec = JobSpec::new("place", 5, |_, rec, em| {
        let i: u64 = rec.decode_key()?;
        em.emit_encoded(&(i % 11), &i);
        Ok(())
    })
    .with_shard(|key, p| codec::decode::<u64>(key).unwrap() as usize % p)
    .with_reducer(|ctx, key, _, em| {
        let k: u64 = codec::decode(key)?;
        assert_eq!(ctx.worker(), k as usize % ctx.workers());
        em.emit_encoded(&k, &(ctx.worker() as u64));
        Ok(())
    });
    let input: Vec<KeyedRecord> = (0..200u64).map(|i| KeyedRecord::encode(&i, &())).collect();
    let out = run_job(&spec, input, &BroadcastStore::new()).unwrap();
    assert_eq!(out.records.len(), 11);
    let per_worker = &out.metrics.records_per_worker;
    assert_eq!(per_worker.len(), 5);
    assert_eq!(per_worker.iter().sum::<u64>(), 200);
}

#[test]
fn every_map_task_finishes_before_any_reduce() {
    let mapped = Arc::new(AtomicUsize::new(0));
    let seen = mapped.clone();
    let spec = JobSpec::new("barrier", 4, move |_, rec, em| {
        mapped.fetch_add(1, Ordering::SeqCst);
        em.emit_record(rec.clone());
        Ok(())
    })
    .with_reducer(move |_, key, values, em| {
        assert_eq!(seen.load(Ordering::SeqCst), 100);
        for v in values {
            em.emit(key.to_vec(), v);
        }
        Ok(())
    });
    let input: Vec<KeyedRecord> = (0..100u64).map(|i| KeyedRecord::encode(&i, &i)).collect();
    run_job(&spec, input, &BroadcastStore::new()).unwrap();
}

#[test]
fn shuffle_accounting_matches_emitted_bytes() {
    let input = words(TEXT);
    let emitted: u64 = TEXT
        .split_whitespace()
        .map(|w| KeyedRecord::encode(w, &1u64).wire_len())
        .sum();
    let one = run_job(&word_count(1), input.clone(), &BroadcastStore::new()).unwrap();
    assert_eq!(one.metrics.shuffle_bytes, emitted);
    assert_eq!(one.metrics.cross_worker_bytes, 0);
    let many = run_job(&word_count(4), input, &BroadcastStore::new()).unwrap();
    assert_eq!(many.metrics.shuffle_bytes, emitted);
    assert!(many.metrics.cross_worker_bytes <= emitted);
}

#[test]
fn map_only_jobs_do_not_shuffle_and_keep_placement() {
    let spec = JobSpec::new("tag", 3, |ctx, rec, em| {
        em.emit(rec.key.clone(), codec::encode(&(ctx.worker() as u64)));
        Ok(())
    });
    let parts = vec![
        vec![KeyedRecord::encode(&0u64, &())],
        vec![KeyedRecord::encode(&1u64, &()), KeyedRecord::encode(&2u64, &())],
        vec![],
    ];
    let (out, metrics) = run_partitioned(&spec, parts, &BroadcastStore::new()).unwrap();
    assert_eq!(metrics.shuffle_bytes, 0);
    assert_eq!(out[0].len(), 1);
    assert_eq!(out[1].len(), 2);
    assert!(out[2].is_empty());
    assert_eq!(out[1][0].decode_value::<u64>().unwrap(), 1);
}

#[test]
fn chained_jobs_map_where_the_previous_job_reduced() {
    // Job 1 routes key i to worker i % p; job 2 checks it runs there.
    let first = JobSpec::new("route", 4, |_, rec, em| {
        em.emit_record(rec.clone());
        Ok(())
    })
    .with_shard(|key, p| codec::decode::<u64>(key).unwrap() as usize % p)
    .with_reducer(|_, key, values, em| {
        for v in values {
            em.emit(key.to_vec(), v);
        }
        Ok(())
    });
    let second = JobSpec::new("check", 4, |ctx, rec, em| {
        let i: u64 = rec.decode_key()?;
        assert_eq!(ctx.worker(), i as usize % 4);
        em.emit_record(rec.clone());
        Ok(())
    });
    let input: Vec<KeyedRecord> = (0..40u64).map(|i| KeyedRecord::encode(&i, &(i * i))).collect();
    let out = chain(&[first, second], input.clone(), &BroadcastStore::new()).unwrap();
    assert_eq!(out.metrics.len(), 2);
    assert_eq!(out.records, input);
}

#[test]
fn broadcast_values_are_scoped_to_an_epoch() {
    let mut store = BroadcastStore::new();
    store.broadcast_value("v", &vec![1.0f64, 2.0]).unwrap();
    assert!(matches!(store.broadcast_value("v", &0u8), Err(Error::DuplicateBroadcast(_))));
    let spec = JobSpec::new("read", 2, |ctx, rec, em| {
        let v = ctx.broadcast::<Vec<f64>>("v")?;
        let again = ctx.broadcast::<Vec<f64>>("v")?;
        assert!(std::rc::Rc::ptr_eq(&v, &again));
        em.emit(rec.key.clone(), codec::encode(&v.iter().sum::<f64>()));
        Ok(())
    });
    let input: Vec<KeyedRecord> = (0..4u64).map(|i| KeyedRecord::encode(&i, &())).collect();
    let out = run_job(&spec, input.clone(), &store).unwrap();
    assert!(out.records.iter().all(|r| r.decode_value::<f64>().unwrap() == 3.0));

    store.advance_epoch();
    assert_eq!(store.epoch(), 1);
    assert!(store.get("v").is_none());
    let err = run_job(&spec, input, &store).unwrap_err();
    assert!(matches!(err, Error::Task { ref stage, .. } if stage == "read"), "{err}");
    store.broadcast_value("v", &vec![5.0f64]).unwrap();
}

#[test]
fn task_errors_name_stage_and_key() {
    let spec = JobSpec::new("boom", 2, |_, rec, _| {
        let i: u64 = rec.decode_key()?;
        if i == 7 {
            return Err(Error::InvalidArgument("seven".into()));
        }
        Ok(())
    });
    let input: Vec<KeyedRecord> = (0..10u64).map(|i| KeyedRecord::encode(&i, &())).collect();
    match run_job(&spec, input, &BroadcastStore::new()) {
        Err(Error::Task { stage, key, message }) => {
            assert_eq!(stage, "boom");
            assert_eq!(key, codec::encode(&7u64));
            assert!(message.contains("seven"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn out_of_range_shard_and_zero_workers_are_rejected() {
    let bad = word_count(2).with_shard(|_, p| p);
    assert!(matches!(run_job(&bad, words(TEXT), &BroadcastStore::new()), Err(Error::Invariant(_))));
    assert!(run_job(&word_count(0), words(TEXT), &BroadcastStore::new()).is_err());
}

#[test]
fn empty_input_yields_empty_output() {
    let out = run_job(&word_count(3), Vec::new(), &BroadcastStore::new()).unwrap();
    assert!(out.records.is_empty());
    assert_eq!(out.metrics.shuffle_bytes, 0);
}

proptest! {
    #[test]
    fn hash_shard_in_range(key in proptest::collection::vec(any::<u8>(), 0..32), p in 1usize..64) {
        prop_assert!(hash_shard(&key, p) < p);
    }

    #[test]
    fn sum_by_key_is_worker_invariant(pairs in proptest::collection::vec((0u8..20, -1e6f64..1e6), 0..200), p in 1usize..9) {
        let spec = |w| JobSpec::new("sum", w, |_, rec, em| {
            em.emit_record(rec.clone());
            Ok(())
        })
        .with_reducer(|_, key, values, em| {
            let mut s = 0.0;
            for v in values {
                s += codec::decode::<f64>(&v)?;
            }
            em.emit(key.to_vec(), codec::encode(&s));
            Ok(())
        });
        let input: Vec<KeyedRecord> = pairs.iter().map(|(k, v)| KeyedRecord::encode(k, v)).collect();
        let store = BroadcastStore::new();
        let one = run_job(&spec(1), input.clone(), &store).unwrap();
        let many = run_job(&spec(p), input, &store).unwrap();
        prop_assert_eq!(one.records, many.records);
    }
}
