//! Canonical byte encoding primitives shared by every serialized form.
//!
//! All canonical serializations in this crate are built from one integer
//! encoding: the value's minimal big-endian byte string (no leading zero
//! bytes, empty for zero) prefixed by a single length byte. The encoding is
//! prefix-free per field, so concatenations of encoded fields are injective.

use sha2::{Digest, Sha256};

/// Tag byte opening a count-signature serialization (`'M'`).
pub const SIGNATURE_TAG: u8 = 0x4D;

/// Tag byte opening a canonical graph serialization (`'G'`).
pub const GRAPH_TAG: u8 = 0x47;

/// A 256-bit digest.
pub type Sha256Digest = [u8; 32];

/// Appends the canonical encoding of `value`: one length byte followed by
/// the minimal big-endian representation. Zero encodes as the single byte
/// `0x00` (length zero, no payload).
pub fn put_uint(out: &mut Vec<u8>, value: u64) {
    let bytes = value.to_be_bytes();
    let skip = bytes.iter().take_while(|&&b| b == 0).count();
    let minimal = &bytes[skip..];
    out.push(minimal.len() as u8);
    out.extend_from_slice(minimal);
}

/// Canonical encoding of a single unsigned integer.
pub fn encode_uint(value: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(9);
    put_uint(&mut out, value);
    out
}

/// Appends a byte string with its length up front, keeping concatenations
/// of variable-length fields injective.
pub fn put_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    put_uint(out, bytes.len() as u64);
    out.extend_from_slice(bytes);
}

/// SHA-256 of `data`.
pub fn sha256(data: &[u8]) -> Sha256Digest {
    let mut hasher = Sha256::new();
    hasher.update(data);
    hasher.finalize().into()
}
