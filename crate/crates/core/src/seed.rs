//! Deterministic RNG streams.
//!
//! Every random stage draws from its own ChaCha stream keyed by the master
//! seed plus a list of labels (problem id, method, run index), so changing
//! one problem never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Derive a child seed from a parent seed and a path of labels.
pub fn derive(seed: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn derive_indexed(seed: u64, label: &str, index: usize) -> u64 {
    derive(seed, &[label, &index.to_string()])
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
