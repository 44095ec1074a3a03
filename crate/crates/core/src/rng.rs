//! Seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose key is the
//! SHA-256 digest of `(root seed, stream name, index)`. Streams with different
//! names or indices are independent, and a run is reproduced from the root
//! seed alone regardless of how work was scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Returns the generator for sub-stream `index` of the stream called `name`.
pub fn derive_rng(root: u64, name: &str, index: u64) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update((name.len() as u64).to_le_bytes());
    hasher.update(name.as_bytes());
    hasher.update(index.to_le_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// Derives a 64-bit child seed, for handing a seed to a component that takes one.
pub fn derive_seed(root: u64, name: &str, index: u64) -> u64 {
    use rand::RngCore;
    derive_rng(root, name, index).next_u64()
}
