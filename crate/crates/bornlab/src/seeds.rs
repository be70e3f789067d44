//! Stable seed derivation. Every check derives its own stream from the
//! scenario seed and a label, so results never depend on execution order or
//! thread count.

use sha2::{Digest, Sha256};

/// Derives a child seed from a base seed and a label by hashing both.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}
