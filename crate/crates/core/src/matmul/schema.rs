use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block split `⟨m, n, k⟩` for `C = A × B`: `m` row blocks of `A`, `n`
/// blocks along the shared inner dimension, `k` column blocks of `B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionSchema {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl PartitionSchema {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self> {
        if m == 0 || n == 0 || k == 0 {
            return Err(Error::Schema(format!("{m}x{n}x{k}: every count must be >= 1")));
        }
        Ok(Self { m, n, k })
    }

    pub const fn single() -> Self {
        Self { m: 1, n: 1, k: 1 }
    }

    /// Checks the schema against the operand shapes of `A (rows_a × inner)`
    /// times `B (inner × cols_b)`.
    pub fn validate_for(&self, rows_a: usize, inner: usize, cols_b: usize) -> Result<()> {
        Self::new(self.m, self.n, self.k)?;
        if self.m > rows_a || self.n > inner || self.k > cols_b {
            return Err(Error::Schema(format!(
                "{self} exceeds operand shape {rows_a}x{inner} * {inner}x{cols_b}"
            )));
        }
        Ok(())
    }

    /// Clamps every count to its dimension.
    pub fn clamped(&self, rows_a: usize, inner: usize, cols_b: usize) -> Self {
        Self {
            m: self.m.clamp(1, rows_a.max(1)),
            n: self.n.clamp(1, inner.max(1)),
            k: self.k.clamp(1, cols_b.max(1)),
        }
    }
}

impl fmt::Display for PartitionSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.m, self.n, self.k)
    }
}

impl FromStr for PartitionSchema {
    type Err = Error;

    /// Parses `MxNxK` (also accepts `,` as separator).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', 'X', ',']).map(str::trim).collect();
        let bad = || Error::Schema(format!("expected MxNxK, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<usize> = parts
            .iter()
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Self::new(nums[0], nums[1], nums[2])
    }
}

/// Identifies one block-multiplication task: output block `(alpha, beta)`
/// and inner summation term `gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockKey {
    pub alpha: u64,
    pub beta: u64,
    pub gamma: u64,
}

impl BlockKey {
    pub fn new(alpha: usize, beta: usize, gamma: usize) -> Self {
        Self {
            alpha: alpha as u64,
            beta: beta as u64,
            gamma: gamma as u64,
        }
    }
}

/// Block holding `index` when `len` items are split evenly into `parts`.
pub fn block_of(index: usize, parts: usize, len: usize) -> usize {
    ((index as u128 * parts as u128) / len as u128) as usize
}

/// Index range of block `b`; inverse of [`block_of`].
pub fn block_range(b: usize, parts: usize, len: usize) -> Range<usize> {
    let start = |b: usize| ((b as u128 * len as u128).div_ceil(parts as u128)) as usize;
    start(b)..start(b + 1)
}

/// Default per-block-group memory budget for [`suggest_schema`].
pub const DEFAULT_BLOCK_BUDGET_BYTES: usize = 64 << 20;

const BYTES_PER_ENTRY: usize = 16;

/// Picks a schema with `m·k ≥ workers` where the shapes allow it, then the
/// smallest `n` whose estimated block-group size fits `budget_bytes`.
pub fn suggest_schema_with_budget(
    rows_a: usize,
    cols_a: usize,
    cols_b: usize,
    nnz_a: usize,
    nnz_b: usize,
    workers: usize,
    budget_bytes: usize,
) -> PartitionSchema {
    let (rows_a, cols_a, cols_b) = (rows_a.max(1), cols_a.max(1), cols_b.max(1));
    let (mut m, mut k) = (1usize, 1usize);
    while m * k < workers {
        let grow_m = m < rows_a;
        let grow_k = k < cols_b;
        match (grow_m, grow_k) {
            (false, false) => break,
            (true, false) => m += 1,
            (false, true) => k += 1,
            // Split whichever side currently has the taller blocks.
            (true, true) if rows_a * k >= cols_b * m => m += 1,
            (true, true) => k += 1,
        }
    }
    let estimate = |n: usize| {
        BYTES_PER_ENTRY * (nnz_a.div_ceil(m * n) + nnz_b.div_ceil(n * k))
    };
    let n = (1..=cols_a).find(|&n| estimate(n) <= budget_bytes).unwrap_or(cols_a);
    PartitionSchema { m, n, k }
}

pub fn suggest_schema(
    rows_a: usize,
    cols_a: usize,
    cols_b: usize,
    nnz_a: usize,
    nnz_b: usize,
    workers: usize,
) -> PartitionSchema {
    suggest_schema_with_budget(
        rows_a,
        cols_a,
        cols_b,
        nnz_a,
        nnz_b,
        workers,
        DEFAULT_BLOCK_BUDGET_BYTES,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_display() {
        let s: PartitionSchema = "20x6x20".parse().unwrap();
        assert_eq!(s, PartitionSchema { m: 20, n: 6, k: 20 });
        assert_eq!(s.to_string(), "20x6x20");
        assert!("1x0x1".parse::<PartitionSchema>().is_err());
        assert!("1x2".parse::<PartitionSchema>().is_err());
    }

    #[test]
    fn validate_bounds() {
        let s = PartitionSchema::new(3, 2, 2).unwrap();
        assert!(s.validate_for(3, 2, 2).is_ok());
        assert!(s.validate_for(2, 2, 2).is_err());
        assert!(s.validate_for(3, 1, 2).is_err());
    }

    #[test]
    fn suggest_tiny_single_worker() {
        assert_eq!(suggest_schema(3, 3, 3, 5, 5, 1), PartitionSchema::single());
    }

    #[test]
    fn suggest_four_workers_dense_ish() {
        let s = suggest_schema(1000, 1000, 1000, 500_000, 500_000, 4);
        assert!(s.m * s.k >= 4);
        assert_eq!(s.n, 1);
    }

    #[test]
    fn suggest_clamps_inner_split() {
        let s = suggest_schema_with_budget(4, 5, 4, 20, 20, 2, 1);
        assert!(s.n <= 5);
        assert_eq!(s.n, 5);
        let s = suggest_schema(1, 5, 1, 5, 5, 64);
        assert_eq!((s.m, s.k), (1, 1));
    }

    proptest! {
        #[test]
        fn block_range_inverts_block_of(len in 1usize..500, parts_seed in 1usize..500) {
            let parts = 1 + parts_seed % len;
            let mut covered = 0;
            for b in 0..parts {
                let r = block_range(b, parts, len);
                prop_assert!(!r.is_empty());
                prop_assert_eq!(r.start, covered);
                for i in r.clone() {
                    prop_assert_eq!(block_of(i, parts, len), b);
                }
                covered = r.end;
            }
            prop_assert_eq!(covered, len);
        }

        #[test]
        fn suggestion_is_legal(
            ra in 1usize..300, ca in 1usize..300, cb in 1usize..300,
            w in 1usize..32, budget in 1usize..100_000,
        ) {
            let s = suggest_schema_with_budget(ra, ca, cb, ra * ca / 3, ca * cb / 3, w, budget);
            prop_assert!(s.validate_for(ra, ca, cb).is_ok());
            prop_assert!(s.m * s.k >= w || (s.m == ra && s.k == cb));
        }
    }
}
