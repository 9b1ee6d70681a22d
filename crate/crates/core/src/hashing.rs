//! Content hashes recorded in run metadata.

use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of `bytes`.
pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Hash of the canonical JSON encoding of a serializable value.
pub fn json_hash<S: serde::Serialize>(value: &S) -> String {
    let bytes = serde_json::to_vec(value).expect("in-memory values serialize");
    sha256_hex(bytes)
}
