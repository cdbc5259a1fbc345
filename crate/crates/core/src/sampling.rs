//! Deterministic pseudo-random branches through lazy perfect trees.
//!
//! Bit `i` of the address with seed `s` is
//! `splitmix64(s + i·0x9E3779B97F4A7C15) & 1`.

use crate::orders::FinBits;
use crate::trees::SkeletonTree;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn address_bit(seed: u64, step: u64) -> u8 {
    (splitmix64(seed.wrapping_add(step.wrapping_mul(GOLDEN))) & 1) as u8
}

/// Seed of the `k`-th derived stream, e.g. a coordinate or a branch number.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    splitmix64(seed ^ splitmix64(k))
}

pub fn address(seed: u64, n: usize) -> FinBits {
    FinBits::from_digits((0..n as u64).map(|i| address_bit(seed, i)))
}

/// The branch `⋃ p_{b↾n}` for the seeded address `b`.
#[derive(Clone, Debug)]
pub struct SampledBranch {
    pub tree: SkeletonTree,
    pub seed: u64,
}

impl SampledBranch {
    pub fn new(tree: SkeletonTree, seed: u64) -> Self {
        SampledBranch { tree, seed }
    }

    pub fn address(&self, n: usize) -> FinBits {
        address(self.seed, n)
    }

    /// `p_{b↾n}`
    pub fn node(&self, n: usize) -> FinBits {
        self.tree.skeleton(&self.address(n))
    }

    /// `x↾len`
    pub fn prefix(&self, len: usize) -> FinBits {
        // lh(p_{b↾n}) ≥ n, so n = len always suffices
        let mut n = 0;
        loop {
            let node = self.node(n);
            if node.len() >= len {
                return node.truncate(len);
            }
            n += 1;
            debug_assert!(n <= len);
        }
    }
}

/// `α` independent branches, one per coordinate.
pub fn sample_tuple(trees: &[SkeletonTree], seed: u64) -> Vec<SampledBranch> {
    trees.iter().enumerate().map(|(k, t)| SampledBranch::new(t.clone(), derive_seed(seed, k as u64))).collect()
}

/// Square prefix `⟨x̄(0)↾len, …⟩`.
pub fn tuple_prefix(branches: &[SampledBranch], len: usize) -> Vec<FinBits> {
    branches.iter().map(|b| b.prefix(len)).collect()
}
