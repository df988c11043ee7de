//! Stable 64-bit hashing and seed derivation.
//!
//! Everything that needs reproducible pseudo-randomness keyed by a string
//! (split assignment, reservoir selection keys) goes through [`keyed_hash`],
//! and every module-local RNG seed is derived from the single global seed via
//! [`derive_seed`]. The std hasher is deliberately avoided: its output is not
//! stable across releases, and splits must survive toolchain upgrades.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    for &b in bytes {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 finalizer; gives FNV output a full avalanche.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable hash of `key` under `seed`. Same inputs always give the same output,
/// on every platform and toolchain.
pub fn keyed_hash(seed: u64, key: &str) -> u64 {
    mix(fnv1a(seed, key.as_bytes()))
}

/// Derive a per-module seed from the global seed and a fixed label, so that
/// changing one stage's label never shifts the randomness of another.
pub fn derive_seed(global_seed: u64, label: &str) -> u64 {
    keyed_hash(global_seed, label)
}
