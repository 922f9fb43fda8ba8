//! Deterministic RNG streams derived from a global seed plus string scopes.
//!
//! Every random decision in the toolchain draws from a stream keyed by what
//! the decision is for, so results do not depend on iteration order or
//! parallel scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Hashes the seed and scope parts into a 32-byte RNG seed. Parts are
/// length-prefixed so distinct part lists never collide.
fn seed_bytes(seed: u64, parts: &[&str]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hasher.finalize().into()
}

/// A reproducible RNG for the given seed and scope.
pub fn stream(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(seed_bytes(seed, parts))
}

/// A derived 64-bit seed for the given scope, for recording in artifacts.
pub fn derived_seed(seed: u64, parts: &[&str]) -> u64 {
    let bytes = seed_bytes(seed, parts);
    u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
}
