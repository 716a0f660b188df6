//! Seeded, grouped k-fold assignment.
//!
//! Groups (plan ids, template ids) are ranked by a seeded SHA-256 hash of
//! their name and dealt round-robin into folds, so fold sizes differ by at
//! most one and membership depends only on the names and the seed.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

pub fn group_hash(seed: u64, name: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(name.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Maps each distinct group to a fold in `0..k`. Callers check that there
/// are at least `k` groups.
pub fn assign_folds<'a>(groups: impl IntoIterator<Item = &'a str>, k: usize, seed: u64) -> BTreeMap<String, usize> {
    let distinct: BTreeSet<&str> = groups.into_iter().collect();
    let mut ranked: Vec<(u64, &str)> = distinct.into_iter().map(|g| (group_hash(seed, g), g)).collect();
    ranked.sort();
    ranked.into_iter().enumerate().map(|(i, (_, g))| (g.to_string(), i % k)).collect()
}
