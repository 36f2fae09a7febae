//! Canonical spec hashing.

use sha2::{Digest, Sha256};

use crate::sequences::SequenceSpec;

/// Hex SHA-256 of the spec's JSON serialization. Field order is fixed by the
/// type definitions, so equal specs hash equally.
pub fn spec_hash(spec: &SequenceSpec) -> String {
    let json = serde_json::to_vec(spec).expect("spec serializes");
    let digest = Sha256::digest(&json);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
