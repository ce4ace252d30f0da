//! Hashed bag-of-token features for a mention in context.

use std::collections::BTreeMap;

use xxhash_rust::xxh64::xxh64;

use super::{MentionContext, TyperError};

/// Seed for the feature hash. Changing it invalidates every saved model.
pub const FEATURE_HASH_SEED: u64 = 0x6d65_6e74_696f_6e31;

/// Smallest feature dimension accepted for training.
pub const MIN_TRAIN_HASH_DIM: u32 = 1 << 10;

/// A power-of-two feature dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashDim(u32);

impl HashDim {
    pub fn new(dim: u32) -> Result<Self, TyperError> {
        if dim < 2 || !dim.is_power_of_two() {
            return Err(TyperError::InvalidConfig(format!(
                "hash_dim {dim} is not a power of two >= 2"
            )));
        }
        Ok(Self(dim))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// Sparse vector with strictly increasing indices.
pub type SparseVector = Vec<(u32, f64)>;

/// Index of a (prefixed) feature name: xxHash64 with a fixed seed, reduced modulo the dimension.
pub fn feature_index(name: &str, dim: HashDim) -> u32 {
    (xxh64(name.as_bytes(), FEATURE_HASH_SEED) & u64::from(dim.0 - 1)) as u32
}

/// Emits `m:` mention tokens, `l:`/`r:` context tokens and `mb:` mention
/// bigrams. Values are counts; colliding features add.
pub fn featurize(ctx: &MentionContext, dim: HashDim) -> SparseVector {
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    let mut name = String::new();
    let mut add = |prefix: &str, parts: &[&str]| {
        name.clear();
        name.push_str(prefix);
        name.push_str(&parts.join(" "));
        *acc.entry(feature_index(&name, dim)).or_insert(0.0) += 1.0;
    };
    for tok in &ctx.mention {
        add("m:", &[tok]);
    }
    for tok in &ctx.left {
        add("l:", &[tok]);
    }
    for tok in &ctx.right {
        add("r:", &[tok]);
    }
    for pair in ctx.mention.windows(2) {
        add("mb:", &[&pair[0], &pair[1]]);
    }
    acc.into_iter().collect()
}
