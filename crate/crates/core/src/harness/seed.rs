use sha2::{Digest, Sha256};

/// Child seed from a master seed and a path of tags; stable across platforms.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for t in tags {
        h.update(t.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
