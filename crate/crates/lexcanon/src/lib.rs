//! Canonical forms and equivalence for multisets and node-attributed graphs
//! under injective relabeling of the feature space.
//!
//! Feature bytes are treated as opaque identifiers: any injective map may be
//! applied to them (and, for graphs, any node permutation) without changing
//! what a value *is*. This crate computes representations that are exactly
//! invariant under those transformations and nothing coarser:
//!
//! * [`multiset`] — count signatures, canonical multisets, injective byte
//!   encodings, equivalence decisions, and explicit relabeling witnesses.
//! * [`graph`] — difference matrices, canonical graph serializations,
//!   permutation-plus-relabeling witnesses, and a difference-aware
//!   Weisfeiler-Lehman style refinement.
//! * [`canon`] — the exact canonical-labeling engine for complete
//!   edge-colored graphs backing the graph module.
//! * [`oracle`] — brute-force ground truth and exhaustive enumeration for
//!   validating all of the above on small instances.
//! * [`anonymize`] — per-graph salted feature hashing, which the canonical
//!   hashes are invariant to by construction.
//! * [`cli`] — the line-oriented command-line front end.
//!
//! Canonical byte strings are the ground truth for equality; SHA-256
//! digests of them are offered as a fixed-width convenience. All operations
//! are pure functions over immutable values and safe to call concurrently.

pub mod anonymize;
pub mod canon;
pub mod cli;
pub mod encoding;
pub mod graph;
pub mod multiset;
pub mod oracle;

pub use graph::Graph;
pub use multiset::Multiset;
