use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matmul::schema::BlockKey;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `alpha mod p`: every block of an output row-block lands on one worker.
pub fn shard_naive(key: &BlockKey, p: usize) -> usize {
    (key.alpha % p as u64) as usize
}

/// `hash(alpha, beta, gamma) mod p`.
pub fn shard_rand(key: &BlockKey, p: usize) -> usize {
    let mut h = 0u64;
    for x in [key.alpha, key.beta, key.gamma] {
        h = splitmix64(h ^ x);
    }
    (h % p as u64) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShardKind {
    Naive,
    Rand,
}

impl fmt::Display for ShardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShardKind::Naive => "naive",
            ShardKind::Rand => "rand",
        })
    }
}

impl FromStr for ShardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(ShardKind::Naive),
            "rand" => Ok(ShardKind::Rand),
            other => Err(Error::InvalidArgument(format!(
                "unknown shard function `{other}` (expected naive or rand)"
            ))),
        }
    }
}

impl ShardKind {
    /// Worker for a block-multiplication task.
    pub fn assign(self, key: &BlockKey, p: usize) -> usize {
        match self {
            ShardKind::Naive => shard_naive(key, p),
            ShardKind::Rand => shard_rand(key, p),
        }
    }

    /// Worker that sums the partial results of output row `row`, which
    /// belongs to row-block `alpha`. The naive policy keeps it on the
    /// worker that multiplied the blocks; the random policy hashes the row.
    pub fn summation_worker(self, alpha: usize, row: usize, p: usize) -> usize {
        match self {
            ShardKind::Naive => alpha % p,
            ShardKind::Rand => (splitmix64(row as u64) % p as u64) as usize,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_depends_on_alpha_only() {
        assert_eq!(shard_naive(&BlockKey::new(5, 9, 2), 4), 1);
        for b in 0..10 {
            for g in 0..10 {
                assert_eq!(shard_naive(&BlockKey::new(0, b, g), 7), 0);
                assert_eq!(shard_naive(&BlockKey::new(3, b, g), 7), 3);
            }
        }
    }

    #[test]
    fn rand_is_deterministic_and_in_range() {
        let k = BlockKey::new(3, 1, 4);
        assert_eq!(shard_rand(&k, 8), shard_rand(&k, 8));
        for a in 0..20 {
            assert_eq!(shard_rand(&BlockKey::new(a, 2, 3), 1), 0);
            assert!(shard_rand(&BlockKey::new(a, 2, 3), 5) < 5);
        }
    }

    #[test]
    fn parse_kind() {
        assert_eq!("naive".parse::<ShardKind>().unwrap(), ShardKind::Naive);
        assert_eq!(ShardKind::Rand.to_string(), "rand");
        assert!("mod".parse::<ShardKind>().is_err());
    }
}
