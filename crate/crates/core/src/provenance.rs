//! Short content digests used as provenance handles.

use sha2::{Digest, Sha256};

pub fn digest_bytes(bytes: &[u8]) -> String {
    let h = Sha256::digest(bytes);
    hex::encode(&h[..8])
}

pub fn digest_str(s: &str) -> String {
    digest_bytes(s.as_bytes())
}

pub fn digest_f64s(v: &[f64]) -> String {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    digest_bytes(&bytes)
}

/// Full-length hex digest, for manifests.
pub fn full_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
