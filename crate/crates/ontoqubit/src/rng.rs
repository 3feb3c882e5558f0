//! Deterministic stream derivation.
//!
//! Every sampling entry point takes an explicit RNG stream. Streams are
//! derived from a root seed and a task label by hashing, so independent
//! tasks never share a stream and reruns are bit-reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derive an independent RNG stream from `(seed, task)`.
pub fn derive_stream(seed: u64, task: &str) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(task.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}
