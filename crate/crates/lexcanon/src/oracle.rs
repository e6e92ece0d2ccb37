//! Brute-force ground truth for equivalence on small instances.
//!
//! Everything here is deliberately naive: direct search over all injective
//! maps or all node permutations, with hard size bounds that fail loudly
//! instead of truncating. The fast paths elsewhere in the crate are
//! validated against these oracles over exhaustively enumerated corpora.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rayon::prelude::*;
use thiserror::Error;

use crate::canon::{self, EdgeColoredGraph};
use crate::graph::{difference_matrix, Graph};
use crate::multiset::Multiset;

/// Largest multiset support the injective-map search accepts.
pub const MAX_ORACLE_SUPPORT: usize = 8;

/// Largest node count the permutation search accepts.
pub const MAX_ORACLE_NODES: usize = 8;

/// Enumeration bounds.
pub const MAX_ENUM_NODES: usize = 5;
pub const MAX_ENUM_ALPHABET: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("multiset support {support} exceeds the oracle bound of {bound}")]
    SupportTooLarge { support: usize, bound: usize },
    #[error("graph with {n} nodes exceeds the oracle bound of {bound}")]
    GraphTooLarge { n: usize, bound: usize },
    #[error("enumeration request n_max={n_max}, alphabet={alphabet} outside supported bounds")]
    EnumerationOutOfBounds { n_max: usize, alphabet: usize },
}

/// Exhaustive decision: does some injective map carry `x2` onto `x1`?
///
/// The search ranges over injective maps from the support of `x2` into the
/// support of `x1` only. That loses nothing: a map sending any element of
/// `x2` to a string outside `x1`'s support cannot transport `x2` onto `x1`,
/// because that image would occur in the result but not in `x1`.
pub fn oracle_multiset_equivalent(x1: &Multiset, x2: &Multiset) -> Result<bool, OracleError> {
    for x in [x1, x2] {
        if x.unique_count() > MAX_ORACLE_SUPPORT {
            return Err(OracleError::SupportTooLarge {
                support: x.unique_count(),
                bound: MAX_ORACLE_SUPPORT,
            });
        }
    }
    if x1.len() != x2.len() {
        return Ok(false);
    }

    let support1: Vec<&[u8]> = x1.support().collect();
    let support2: Vec<&[u8]> = x2.support().collect();
    for images in support1.iter().copied().permutations(support2.len()) {
        let transported = Multiset::from_elements(x2.iter().flat_map(|(element, count)| {
            let index = support2
                .binary_search(&element)
                .expect("element in own support");
            std::iter::repeat_n(images[index].to_vec(), count)
        }));
        if &transported == x1 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Runs `visit` on every permutation of `0..n` until one returns true.
fn any_permutation<F: FnMut(&[usize]) -> bool>(n: usize, mut visit: F) -> bool {
    // Heap's algorithm, allocation-free per step.
    let mut order: Vec<usize> = (0..n).collect();
    if visit(&order) {
        return true;
    }
    let mut counters = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(counters[i], i);
            }
            if visit(&order) {
                return true;
            }
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    false
}

/// Exhaustive decision: does some node permutation match the adjacency and
/// feature-equality pattern of the two graphs?
///
/// Matching the equality pattern already guarantees an injective relabeling
/// exists; the search still materializes one per candidate permutation as a
/// double check.
pub fn oracle_graph_equivalent(g1: &Graph, g2: &Graph) -> Result<bool, OracleError> {
    for g in [g1, g2] {
        if g.node_count() > MAX_ORACLE_NODES {
            return Err(OracleError::GraphTooLarge {
                n: g.node_count(),
                bound: MAX_ORACLE_NODES,
            });
        }
    }
    if g1.node_count() != g2.node_count() {
        return Ok(false);
    }

    let n = g1.node_count();
    let d1 = difference_matrix(g1.features());
    let d2 = difference_matrix(g2.features());
    Ok(any_permutation(n, |pi| {
        for i in 0..n {
            for j in (i + 1)..n {
                if g1.has_edge(pi[i], pi[j]) != g2.has_edge(i, j) {
                    return false;
                }
                if d1.entry(pi[i], pi[j]) != d2.entry(i, j) {
                    return false;
                }
            }
        }
        let mut sigma: BTreeMap<&[u8], &[u8]> = BTreeMap::new();
        let mut images: BTreeSet<&[u8]> = BTreeSet::new();
        for (i, &image) in pi.iter().enumerate() {
            let from = g2.feature(i);
            let to = g1.feature(image);
            match sigma.get(from) {
                Some(&seen) => {
                    if seen != to {
                        return false;
                    }
                }
                None => {
                    if !images.insert(to) {
                        return false;
                    }
                    sigma.insert(from, to);
                }
            }
        }
        true
    }))
}

/// Minimum of [`canon::serialize_in_order`] over every node order.
pub fn min_serialization_brute_force(g: &EdgeColoredGraph) -> Result<Vec<u8>, OracleError> {
    let n = g.node_count();
    if n > MAX_ORACLE_NODES {
        return Err(OracleError::GraphTooLarge {
            n,
            bound: MAX_ORACLE_NODES,
        });
    }
    let mut min: Option<Vec<u8>> = None;
    any_permutation(n, |order| {
        let bytes = canon::serialize_in_order(g, order);
        if min.as_ref().is_none_or(|m| bytes < *m) {
            min = Some(bytes);
        }
        false
    });
    Ok(min.unwrap_or_default())
}

fn check_enum_bounds(n_max: usize, alphabet: usize) -> Result<(), OracleError> {
    if n_max > MAX_ENUM_NODES || alphabet == 0 || alphabet > MAX_ENUM_ALPHABET {
        return Err(OracleError::EnumerationOutOfBounds { n_max, alphabet });
    }
    Ok(())
}

fn letters(alphabet_size: usize) -> Vec<Vec<u8>> {
    [b"a", b"b", b"c"]
        .iter()
        .take(alphabet_size)
        .map(|s| s.to_vec())
        .collect()
}

/// Every simple graph on at most `n_max` nodes with every feature
/// assignment over the first `alphabet_size` letters, in a fixed order.
/// The stream can be recreated at will; calls are independent.
pub fn enumerate_graphs(
    n_max: usize,
    alphabet_size: usize,
) -> Result<impl Iterator<Item = Graph>, OracleError> {
    check_enum_bounds(n_max, alphabet_size)?;
    let letters = letters(alphabet_size);
    Ok((0..=n_max).flat_map(move |n| {
        let letters = letters.clone();
        let masks = 1usize << (n * n.saturating_sub(1) / 2);
        let assignments = alphabet_size.pow(n as u32);
        (0..assignments).flat_map(move |assignment| {
            let letters = letters.clone();
            (0..masks).map(move |mask| {
                let features: Vec<Vec<u8>> = (0..n)
                    .map(|node| {
                        letters[(assignment / alphabet_size.pow(node as u32)) % alphabet_size]
                            .clone()
                    })
                    .collect();
                let mut edges = Vec::new();
                let mut bit = 0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if mask & (1 << bit) != 0 {
                            edges.push((i, j));
                        }
                        bit += 1;
                    }
                }
                Graph::new(features, &edges).expect("enumerated edges are valid")
            })
        })
    }))
}

/// Every multiset of size at most `size_max` over the first
/// `alphabet_size` letters, in a fixed order.
pub fn enumerate_multisets(
    size_max: usize,
    alphabet_size: usize,
) -> Result<impl Iterator<Item = Multiset>, OracleError> {
    check_enum_bounds(size_max, alphabet_size)?;
    let letters = letters(alphabet_size);
    Ok((0..=size_max).flat_map(move |size| {
        letters
            .clone()
            .into_iter()
            .combinations_with_replacement(size)
            .map(Multiset::from_elements)
    }))
}

/// Outcome of one exhaustive agreement scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgreementReport {
    /// Instances enumerated.
    pub instances: usize,
    /// Comparisons performed.
    pub comparisons: u64,
    /// Comparisons where the fast path and the oracle disagreed.
    pub mismatches: u64,
}

impl AgreementReport {
    pub fn agrees(&self) -> bool {
        self.mismatches == 0
    }
}

/// Compares `multisets_equivalent` against the injective-map oracle over
/// all pairs from the enumerated multiset corpus.
pub fn multiset_agreement(
    size_max: usize,
    alphabet_size: usize,
) -> Result<AgreementReport, OracleError> {
    let corpus: Vec<Multiset> = enumerate_multisets(size_max, alphabet_size)?.collect();
    let mut comparisons = 0u64;
    let mut mismatches = 0u64;
    for i in 0..corpus.len() {
        for j in (i + 1)..corpus.len() {
            let fast = crate::multiset::multisets_equivalent(&corpus[i], &corpus[j]);
            let truth = oracle_multiset_equivalent(&corpus[i], &corpus[j])?;
            comparisons += 1;
            if fast != truth {
                mismatches += 1;
            }
        }
    }
    Ok(AgreementReport {
        instances: corpus.len(),
        comparisons,
        mismatches,
    })
}

/// Compares `graphs_equivalent` (canonical bytes) against the permutation
/// oracle over all same-size pairs from the enumerated graph corpus.
/// Different node counts are never equivalent under either route, so the
/// scan is restricted to same-size pairs.
pub fn graph_agreement(n_max: usize, alphabet_size: usize) -> Result<AgreementReport, OracleError> {
    let corpus: Vec<Graph> = enumerate_graphs(n_max, alphabet_size)?.collect();
    let bytes: Vec<Vec<u8>> = corpus
        .iter()
        .map(|g| {
            crate::graph::canonical_graph_form(g)
                .expect("enumerated graphs are within the node guard")
                .bytes()
                .to_vec()
        })
        .collect();

    let mut by_size: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (index, g) in corpus.iter().enumerate() {
        by_size.entry(g.node_count()).or_default().push(index);
    }

    let mut comparisons = 0u64;
    let mut mismatches = 0u64;
    for group in by_size.values() {
        let (c, m) = group
            .par_iter()
            .enumerate()
            .map(|(offset, &i)| {
                let mut local = (0u64, 0u64);
                for &j in &group[offset + 1..] {
                    let fast = bytes[i] == bytes[j];
                    let truth = oracle_graph_equivalent(&corpus[i], &corpus[j])
                        .expect("enumerated graphs are within oracle bounds");
                    local.0 += 1;
                    if fast != truth {
                        local.1 += 1;
                    }
                }
                local
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        comparisons += c;
        mismatches += m;
    }

    Ok(AgreementReport {
        instances: corpus.len(),
        comparisons,
        mismatches,
    })
}

/// Compares the canonical engine's serialization against the brute-force
/// minimum over all node orders, for every enumerated graph's combined
/// edge coloring.
pub fn canon_agreement(n_max: usize, alphabet_size: usize) -> Result<AgreementReport, OracleError> {
    let corpus: Vec<Graph> = enumerate_graphs(n_max, alphabet_size)?.collect();
    let (comparisons, mismatches) = corpus
        .par_iter()
        .map(|g| {
            let colored = crate::graph::combined_edge_coloring(g);
            let (_, engine) = canon::canonical_form(&colored, MAX_ORACLE_NODES)
                .expect("enumerated graphs are within bounds");
            let truth = min_serialization_brute_force(&colored)
                .expect("enumerated graphs are within bounds");
            (1u64, u64::from(engine != truth))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(AgreementReport {
        instances: corpus.len(),
        comparisons,
        mismatches,
    })
}
