//! Deterministic seed derivation.
//!
//! Every random stream in the toolkit is a ChaCha8 generator seeded from a
//! 64-bit value. Sub-stages derive their seed from a master seed and a label:
//! the first eight bytes (little-endian) of
//! `SHA-256(master.to_le_bytes() || label)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
