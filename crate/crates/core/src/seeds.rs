//! Seed derivation shared by every stage that needs an independent stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic 64-bit seed derived from a base seed and a list of tags.
pub fn derive(base: u64, tags: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for t in tags {
        h.update((t.len() as u64).to_le_bytes());
        h.update(t);
    }
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

/// Seeded stream for a tagged purpose.
pub fn rng(base: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, &[tag.as_bytes()]))
}

/// Per-item stream, independent of evaluation order.
pub fn item_rng(base: u64, tag: &str, item: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, &[tag.as_bytes(), &item.to_le_bytes()]))
}

/// Hex SHA-256 of a byte stream, used for data fingerprints.
pub fn fingerprint(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
