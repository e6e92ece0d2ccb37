//! Node-attributed graphs and their canonical forms under simultaneous node
//! permutation and injective feature relabeling.
//!
//! A graph is a symmetric zero-diagonal adjacency matrix plus one byte-string
//! feature per node. Feature content is treated as opaque: only the
//! equality pattern between features — the difference matrix — matters.
//! [`canonical_graph_form`] serializes the pair (adjacency, difference
//! matrix) canonically, so two graphs get equal bytes exactly when some node
//! permutation plus injective relabeling carries one onto the other.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::canon::{self, EdgeColoredGraph, SizeGuardError};
use crate::encoding::{put_uint, sha256, Sha256Digest, GRAPH_TAG};
use crate::multiset::Relabeling;

/// Default node-count guard for the exact canonical search.
pub const DEFAULT_NODE_GUARD: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },
    #[error("edge endpoint {node} out of range for {n} nodes")]
    EdgeOutOfRange { node: usize, n: usize },
    #[error(transparent)]
    TooLarge(#[from] SizeGuardError),
}

/// A bijection on `0..n`, stored as the image of each index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePermutation {
    map: Vec<usize>,
}

impl NodePermutation {
    /// Validates that `map` is a bijection on `0..map.len()`.
    pub fn new(map: Vec<usize>) -> Option<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &image in &map {
            if image >= n || seen[image] {
                return None;
            }
            seen[image] = true;
        }
        Some(NodePermutation { map })
    }

    pub fn identity(n: usize) -> Self {
        NodePermutation {
            map: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &image)| i == image)
    }

    /// Image of one index.
    pub fn apply(&self, index: usize) -> usize {
        self.map[index]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> NodePermutation {
        let mut inv = vec![0usize; self.map.len()];
        for (index, &image) in self.map.iter().enumerate() {
            inv[image] = index;
        }
        NodePermutation { map: inv }
    }
}

/// A simple undirected graph with one byte-string feature per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<bool>,
    features: Vec<Vec<u8>>,
}

impl Graph {
    /// Builds a graph from features and an edge list. Edges are undirected;
    /// duplicates and reversed copies collapse. Self-loops and out-of-range
    /// endpoints are rejected.
    pub fn new(features: Vec<Vec<u8>>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let n = features.len();
        let mut adjacency = vec![false; n * n];
        for &(i, j) in edges {
            if i >= n {
                return Err(GraphError::EdgeOutOfRange { node: i, n });
            }
            if j >= n {
                return Err(GraphError::EdgeOutOfRange { node: j, n });
            }
            if i == j {
                return Err(GraphError::SelfLoop { node: i });
            }
            adjacency[i * n + j] = true;
            adjacency[j * n + i] = true;
        }
        Ok(Graph {
            n,
            adjacency,
            features,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adjacency[i * self.n + j]
    }

    pub fn features(&self) -> &[Vec<u8>] {
        &self.features
    }

    pub fn feature(&self, node: usize) -> &[u8] {
        &self.features[node]
    }

    /// Edges as `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has_edge(i, j) {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    /// The graph with node `v` moved to index `perm.apply(v)`.
    pub fn permuted(&self, perm: &NodePermutation) -> Graph {
        assert_eq!(perm.len(), self.n);
        let mut features = vec![Vec::new(); self.n];
        let mut adjacency = vec![false; self.n * self.n];
        for v in 0..self.n {
            features[perm.apply(v)] = self.features[v].clone();
        }
        for i in 0..self.n {
            for j in 0..self.n {
                if self.adjacency[i * self.n + j] {
                    adjacency[perm.apply(i) * self.n + perm.apply(j)] = true;
                }
            }
        }
        Graph {
            n: self.n,
            adjacency,
            features,
        }
    }

    /// The graph with every feature passed through `sigma`.
    pub fn relabeled(&self, sigma: &Relabeling) -> Graph {
        self.map_features(|f| sigma.apply(f))
    }

    /// The graph with features transformed nodewise; adjacency unchanged.
    pub fn map_features<F: Fn(&[u8]) -> Vec<u8>>(&self, f: F) -> Graph {
        Graph {
            n: self.n,
            adjacency: self.adjacency.clone(),
            features: self.features.iter().map(|x| f(x)).collect(),
        }
    }
}

/// The feature-equality pattern of a node list, stored as the partition of
/// indices into feature-equality blocks. The dense view has entry `(i, j)`
/// set iff nodes `i` and `j` carry byte-equal features; the diagonal is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceMatrix {
    n: usize,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl DifferenceMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Blocks in order of first node occurrence; nodes ascending within.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing `node`.
    pub fn block_of(&self, node: usize) -> usize {
        self.block_of[node]
    }

    /// Entry `(i, j)` of the dense view.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.block_of[i] == self.block_of[j]
    }

    /// Full dense matrix, mainly for tests and small instances.
    pub fn dense(&self) -> Vec<Vec<bool>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j)).collect())
            .collect()
    }
}

/// Groups indices whose features are byte-equal.
pub fn difference_matrix(features: &[Vec<u8>]) -> DifferenceMatrix {
    let mut first_block: BTreeMap<&[u8], usize> = BTreeMap::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of = Vec::with_capacity(features.len());
    for (node, feature) in features.iter().enumerate() {
        let block = *first_block.entry(feature.as_slice()).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[block].push(node);
        block_of.push(block);
    }
    DifferenceMatrix {
        n: features.len(),
        blocks,
        block_of,
    }
}

/// Packs adjacency and the difference matrix into one edge-colored complete
/// graph: the pair color is `adjacency + 2 * same_block`, in `0..=3`.
pub fn combined_edge_coloring(g: &Graph) -> EdgeColoredGraph {
    let diff = difference_matrix(g.features());
    EdgeColoredGraph::from_fn(g.node_count(), |i, j| {
        u8::from(g.has_edge(i, j)) + 2 * u8::from(diff.entry(i, j))
    })
}

/// Canonical serialization of a graph's equivalence class.
///
/// `bytes` are equal for two graphs exactly when some node permutation and
/// injective feature relabeling carry one onto the other. In canonical
/// order, feature-equality blocks occupy consecutive positions with
/// non-decreasing sizes; `canonical_labels` lists the 1-based block number
/// of each canonical position, the integer relabeling of the features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalGraphForm {
    bytes: Vec<u8>,
    canonical_labels: Vec<usize>,
    permutation: NodePermutation,
}

impl CanonicalGraphForm {
    /// The injective canonical serialization.
    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// 1-based block labels by canonical position: `[1, .., 1, 2, .., k]`
    /// with non-decreasing block sizes.
    pub fn canonical_labels(&self) -> &[usize] {
        &self.canonical_labels
    }

    /// Sends each original node to its canonical position.
    pub fn permutation(&self) -> &NodePermutation {
        &self.permutation
    }

    /// Label of an original node: the block number of its canonical slot.
    pub fn label_of(&self, node: usize) -> usize {
        self.canonical_labels[self.permutation.apply(node)]
    }

    /// Block sizes in canonical order (non-decreasing).
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = Vec::new();
        for &label in &self.canonical_labels {
            if label > sizes.len() {
                sizes.push(0);
            }
            sizes[label - 1] += 1;
        }
        sizes
    }
}

/// [`canonical_graph_form`] with an explicit node guard.
pub fn canonical_graph_form_guarded(
    g: &Graph,
    guard: usize,
) -> Result<CanonicalGraphForm, GraphError> {
    let n = g.node_count();
    let (engine_perm, _) = canon::canonical_form(&combined_edge_coloring(g), guard)?;

    // Group canonical positions into feature-equality blocks, order blocks
    // by ascending size (first position breaking ties), and reseat each
    // block contiguously. Both steps read only the canonical matrix, which
    // equivalent graphs share, so the final order is class-canonical and
    // realizes the sorted block-diagonal difference matrix.
    let diff = difference_matrix(g.features());
    let engine_inverse = engine_perm.inverse();
    let mut positions_by_block: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for position in 0..n {
        let block = diff.block_of(engine_inverse.apply(position));
        positions_by_block.entry(block).or_default().push(position);
    }
    let mut block_positions: Vec<Vec<usize>> = positions_by_block.into_values().collect();
    block_positions.sort_by_key(|positions| (positions.len(), positions[0]));

    let mut final_of_engine = vec![0usize; n];
    let mut canonical_labels = Vec::with_capacity(n);
    let mut next_position = 0;
    for (block_index, positions) in block_positions.iter().enumerate() {
        for &position in positions {
            final_of_engine[position] = next_position;
            canonical_labels.push(block_index + 1);
            next_position += 1;
        }
    }

    let permutation = NodePermutation::new(
        (0..n)
            .map(|v| final_of_engine[engine_perm.apply(v)])
            .collect(),
    )
    .expect("composition of bijections");

    let inverse = permutation.inverse();
    let mut bytes = Vec::new();
    bytes.push(GRAPH_TAG);
    put_uint(&mut bytes, n as u64);
    put_uint(&mut bytes, block_positions.len() as u64);
    for positions in &block_positions {
        put_uint(&mut bytes, positions.len() as u64);
    }
    let bit_count = n * n.saturating_sub(1) / 2;
    let mut bits = vec![0u8; bit_count.div_ceil(8)];
    let mut bit = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if g.has_edge(inverse.apply(i), inverse.apply(j)) {
                bits[bit / 8] |= 1 << (7 - bit % 8);
            }
            bit += 1;
        }
    }
    bytes.extend_from_slice(&bits);

    Ok(CanonicalGraphForm {
        bytes,
        canonical_labels,
        permutation,
    })
}

/// Canonical form of a graph under the default node guard.
pub fn canonical_graph_form(g: &Graph) -> Result<CanonicalGraphForm, GraphError> {
    canonical_graph_form_guarded(g, DEFAULT_NODE_GUARD)
}

/// Digest of the canonical serialization; invariant under node permutation
/// and injective feature relabeling.
pub fn graph_hash(g: &Graph) -> Result<Sha256Digest, GraphError> {
    graph_hash_guarded(g, DEFAULT_NODE_GUARD)
}

pub fn graph_hash_guarded(g: &Graph, guard: usize) -> Result<Sha256Digest, GraphError> {
    Ok(sha256(canonical_graph_form_guarded(g, guard)?.bytes()))
}

/// True iff some node permutation plus injective feature relabeling carries
/// `g2` onto `g1`, decided by comparing canonical bytes.
pub fn graphs_equivalent(g1: &Graph, g2: &Graph) -> Result<bool, GraphError> {
    graphs_equivalent_guarded(g1, g2, DEFAULT_NODE_GUARD)
}

pub fn graphs_equivalent_guarded(g1: &Graph, g2: &Graph, guard: usize) -> Result<bool, GraphError> {
    Ok(canonical_graph_form_guarded(g1, guard)?.bytes()
        == canonical_graph_form_guarded(g2, guard)?.bytes())
}

/// Explicit equivalence witness: a node permutation `pi` and injective
/// relabeling `sigma` with `adjacency1 = pi(adjacency2)` and
/// `features1 = pi(sigma(features2))`, or `None` when not equivalent.
pub fn witness_isomorphism(
    g1: &Graph,
    g2: &Graph,
) -> Result<Option<(NodePermutation, Relabeling)>, GraphError> {
    witness_isomorphism_guarded(g1, g2, DEFAULT_NODE_GUARD)
}

pub fn witness_isomorphism_guarded(
    g1: &Graph,
    g2: &Graph,
    guard: usize,
) -> Result<Option<(NodePermutation, Relabeling)>, GraphError> {
    let form1 = canonical_graph_form_guarded(g1, guard)?;
    let form2 = canonical_graph_form_guarded(g2, guard)?;
    if form1.bytes() != form2.bytes() {
        return Ok(None);
    }

    let n = g1.node_count();
    let inverse1 = form1.permutation().inverse();
    let inverse2 = form2.permutation().inverse();

    // Route each node of g2 through its canonical position into g1.
    let pi = NodePermutation::new(
        (0..n)
            .map(|i| inverse1.apply(form2.permutation().apply(i)))
            .collect(),
    )
    .expect("composition of bijections");

    // Pair block-representative features across the shared canonical block
    // structure, then close the pairing into a global injection.
    let mut pairs = Vec::new();
    let mut seen_label = 0;
    for position in 0..n {
        let label = form1.canonical_labels()[position];
        if label > seen_label {
            seen_label = label;
            let to = g1.feature(inverse1.apply(position)).to_vec();
            let from = g2.feature(inverse2.apply(position)).to_vec();
            pairs.push((from, to));
        }
    }
    let sigma = Relabeling::from_pairs_cycle_completed(pairs);

    debug_assert!(verify_witness(g1, g2, &pi, &sigma));
    Ok(Some((pi, sigma)))
}

/// Direct check that a claimed witness transports `g2` onto `g1`.
pub fn verify_witness(g1: &Graph, g2: &Graph, pi: &NodePermutation, sigma: &Relabeling) -> bool {
    let n = g2.node_count();
    if g1.node_count() != n || pi.len() != n {
        return false;
    }
    for i in 0..n {
        if g1.feature(pi.apply(i)) != sigma.apply(g2.feature(i)).as_slice() {
            return false;
        }
        for j in (i + 1)..n {
            if g1.has_edge(pi.apply(i), pi.apply(j)) != g2.has_edge(i, j) {
                return false;
            }
        }
    }
    true
}

/// Round budget for [`wl_diff_refinement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlRounds {
    /// Run exactly this many rounds.
    Fixed(usize),
    /// Refine until the node partition stops changing.
    UntilStable,
}

/// Result of difference-aware color refinement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WlRefinement {
    /// Refinement rounds that changed the partition (or the fixed budget).
    pub rounds: usize,
    /// Final color frequencies.
    pub histogram: BTreeMap<usize, usize>,
    /// Digest of the sorted final coloring.
    pub digest: Sha256Digest,
}

/// Color refinement driven by adjacency and the difference matrix together.
///
/// Every node starts with one shared color. Each round recolors a node by
/// the triple (own color, multiset of neighbor colors, multiset of colors in
/// its feature-equality block), with fresh colors assigned by sorted-key
/// rank so they carry no label information. Equivalent graphs always digest
/// equally; distinct graphs may collide, as with any 1-dimensional
/// refinement.
pub fn wl_diff_refinement(g: &Graph, rounds: WlRounds) -> WlRefinement {
    let n = g.node_count();
    let diff = difference_matrix(g.features());

    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).filter(|&v| g.has_edge(u, v)).collect())
        .collect();
    let mates: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            diff.blocks()[diff.block_of(u)]
                .iter()
                .copied()
                .filter(|&v| v != u)
                .collect()
        })
        .collect();

    let mut colors = vec![0usize; n];
    let mut distinct = usize::from(n > 0);
    let mut effective_rounds = 0;

    let budget = match rounds {
        WlRounds::Fixed(r) => r,
        WlRounds::UntilStable => n,
    };
    for _ in 0..budget {
        let keys: Vec<(usize, Vec<usize>, Vec<usize>)> = (0..n)
            .map(|u| {
                let mut from_adjacency: Vec<usize> =
                    neighbors[u].iter().map(|&v| colors[v]).collect();
                from_adjacency.sort_unstable();
                let mut from_blocks: Vec<usize> = mates[u].iter().map(|&v| colors[v]).collect();
                from_blocks.sort_unstable();
                (colors[u], from_adjacency, from_blocks)
            })
            .collect();

        let mut rank_of: BTreeMap<&(usize, Vec<usize>, Vec<usize>), usize> = BTreeMap::new();
        for key in &keys {
            rank_of.insert(key, 0);
        }
        let new_distinct = rank_of.len();
        for (rank, (_, slot)) in rank_of.iter_mut().enumerate() {
            *slot = rank;
        }
        colors = keys.iter().map(|key| rank_of[key]).collect();

        if new_distinct == distinct {
            if let WlRounds::UntilStable = rounds {
                break;
            }
        } else {
            effective_rounds += 1;
        }
        distinct = new_distinct;
    }
    if let WlRounds::Fixed(r) = rounds {
        effective_rounds = r;
    }

    let mut sorted = colors.clone();
    sorted.sort_unstable();
    let mut serialized = Vec::with_capacity(2 + 2 * n);
    put_uint(&mut serialized, n as u64);
    for color in &sorted {
        put_uint(&mut serialized, *color as u64);
    }

    let mut histogram = BTreeMap::new();
    for color in colors {
        *histogram.entry(color).or_insert(0usize) += 1;
    }

    WlRefinement {
        rounds: effective_rounds,
        histogram,
        digest: sha256(&serialized),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(features: &[&str], edges: &[(usize, usize)]) -> Graph {
        Graph::new(
            features.iter().map(|f| f.as_bytes().to_vec()).collect(),
            edges,
        )
        .unwrap()
    }

    #[test]
    fn difference_matrix_of_mixed_features() {
        let d = difference_matrix(&[b"a".to_vec(), b"b".to_vec(), b"a".to_vec()]);
        assert_eq!(
            d.dense(),
            vec![
                vec![true, false, true],
                vec![false, true, false],
                vec![true, false, true],
            ]
        );
        assert_eq!(d.blocks(), &[vec![0, 2], vec![1]]);
    }

    #[test]
    fn difference_matrix_extremes() {
        let distinct = difference_matrix(&[b"a".to_vec(), b"b".to_vec(), b"c".to_vec()]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(distinct.entry(i, j), i == j);
            }
        }
        let equal = difference_matrix(&[b"x".to_vec(), b"x".to_vec()]);
        assert!(equal.dense().iter().flatten().all(|&b| b));
        assert_eq!(difference_matrix(&[]).block_count(), 0);
    }

    #[test]
    fn combined_coloring_componentwise() {
        let linked_equal = graph(&["a", "a"], &[(0, 1)]);
        assert_eq!(combined_edge_coloring(&linked_equal).color(0, 1), 3);

        let apart_distinct = graph(&["a", "b"], &[]);
        assert_eq!(combined_edge_coloring(&apart_distinct).color(0, 1), 0);

        let path = graph(&["a", "b", "a"], &[(0, 1), (1, 2)]);
        let colored = combined_edge_coloring(&path);
        assert_eq!(colored.color(0, 1), 1);
        assert_eq!(colored.color(1, 2), 1);
        assert_eq!(colored.color(0, 2), 2);
    }

    #[test]
    fn block_shape_separates_canonical_forms() {
        let two_blocks = graph(&["p", "q"], &[]);
        let one_block = graph(&["u", "u"], &[]);
        assert_ne!(
            canonical_graph_form(&two_blocks).unwrap().bytes(),
            canonical_graph_form(&one_block).unwrap().bytes()
        );
    }

    #[test]
    fn uniform_triangles_share_canonical_bytes() {
        let t1 = graph(&["a", "a", "a"], &[(0, 1), (1, 2), (0, 2)]);
        let t2 = graph(&["z", "z", "z"], &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(
            canonical_graph_form(&t1).unwrap().bytes(),
            canonical_graph_form(&t2).unwrap().bytes()
        );
    }

    #[test]
    fn equivalent_paths_share_canonical_bytes() {
        let p1 = graph(&["a", "b", "a"], &[(0, 1), (1, 2)]);
        let p2 = graph(&["c", "a", "c"], &[(0, 1), (1, 2)]);
        assert_eq!(
            canonical_graph_form(&p1).unwrap().bytes(),
            canonical_graph_form(&p2).unwrap().bytes()
        );
        assert!(graphs_equivalent(&p1, &p2).unwrap());
    }

    #[test]
    fn endpoint_pattern_separates_paths() {
        let p1 = graph(&["a", "b", "a"], &[(0, 1), (1, 2)]);
        let p2 = graph(&["a", "a", "b"], &[(0, 1), (1, 2)]);
        assert!(!graphs_equivalent(&p1, &p2).unwrap());
        assert!(graphs_equivalent(&p1, &p1).unwrap());
    }

    #[test]
    fn canonical_labels_sort_blocks_ascending() {
        let g = graph(&["a", "b", "a"], &[(0, 1), (1, 2)]);
        let form = canonical_graph_form(&g).unwrap();
        assert_eq!(form.canonical_labels(), &[1, 2, 2]);
        assert_eq!(form.block_sizes(), vec![1, 2]);
        assert_eq!(form.label_of(1), 1);
        assert_eq!(form.label_of(0), 2);
        assert_eq!(form.label_of(2), 2);
    }

    #[test]
    fn empty_graph_bytes_and_hash_are_pinned() {
        let empty = graph(&[], &[]);
        let form = canonical_graph_form(&empty).unwrap();
        assert_eq!(form.bytes(), &[0x47, 0x00, 0x00]);
        assert_eq!(
            hex::encode(graph_hash(&empty).unwrap()),
            "3167ce7b8db35d4b305d6495895e6411af2bfea1dd8a1ea243205cb56732a481"
        );
    }

    #[test]
    fn hash_is_invariant_under_permutation_and_relabeling() {
        let g = graph(&["a", "b", "a", "c"], &[(0, 1), (1, 2), (2, 3)]);
        let base = graph_hash(&g).unwrap();

        let perm = NodePermutation::new(vec![2, 0, 3, 1]).unwrap();
        assert_eq!(graph_hash(&g.permuted(&perm)).unwrap(), base);

        let sigma = Relabeling::from_pairs_cycle_completed([
            (b"a".to_vec(), b"x".to_vec()),
            (b"b".to_vec(), b"y".to_vec()),
            (b"c".to_vec(), b"z".to_vec()),
        ]);
        assert_eq!(graph_hash(&g.relabeled(&sigma)).unwrap(), base);
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let g = graph(&["a", "b", "a", "b"], &[(0, 1), (2, 3), (1, 2)]);
        let form = canonical_graph_form(&g).unwrap();

        let reordered = g.permuted(form.permutation());
        assert_eq!(
            canonical_graph_form(&reordered).unwrap().bytes(),
            form.bytes()
        );

        // Replacing features by their canonical integer labels is itself an
        // injective relabeling, so the bytes survive that too.
        let relabeled = Graph::new(
            form.canonical_labels()
                .iter()
                .map(|label| label.to_string().into_bytes())
                .collect(),
            &reordered.edges(),
        )
        .unwrap();
        assert_eq!(
            canonical_graph_form(&relabeled).unwrap().bytes(),
            form.bytes()
        );
    }

    #[test]
    fn size_guard_is_propagated() {
        let g = graph(&["a", "b", "c"], &[(0, 1)]);
        let err = canonical_graph_form_guarded(&g, 2).unwrap_err();
        assert_eq!(err, GraphError::TooLarge(SizeGuardError { n: 3, guard: 2 }));
        assert!(graph_hash_guarded(&g, 2).is_err());
    }

    #[test]
    fn witness_for_identical_graphs_is_identity() {
        let g = graph(&["a", "b", "a"], &[(0, 1), (1, 2)]);
        let (pi, sigma) = witness_isomorphism(&g, &g).unwrap().unwrap();
        assert!(pi.is_identity());
        assert!(sigma.is_identity());
    }

    #[test]
    fn witness_transports_equivalent_paths() {
        let g1 = graph(&["a", "b", "a"], &[(0, 1), (1, 2)]);
        let g2 = graph(&["c", "a", "c"], &[(0, 1), (1, 2)]);
        let (pi, sigma) = witness_isomorphism(&g1, &g2).unwrap().unwrap();
        assert!(verify_witness(&g1, &g2, &pi, &sigma));
        assert_eq!(sigma.apply(b"c"), b"a".to_vec());
        assert_eq!(sigma.apply(b"a"), b"b".to_vec());
    }

    #[test]
    fn witness_is_none_for_inequivalent_graphs() {
        let g1 = graph(&["a", "b", "a"], &[(0, 1), (1, 2)]);
        let g2 = graph(&["a", "a", "b"], &[(0, 1), (1, 2)]);
        assert!(witness_isomorphism(&g1, &g2).unwrap().is_none());
    }

    #[test]
    fn wl_single_node() {
        let g = graph(&["a"], &[]);
        let result = wl_diff_refinement(&g, WlRounds::UntilStable);
        assert_eq!(result.histogram, BTreeMap::from([(0, 1)]));
    }

    #[test]
    fn wl_is_invariant_under_transformations() {
        let g = graph(&["a", "b", "a", "c"], &[(0, 1), (1, 2), (2, 3)]);
        let base = wl_diff_refinement(&g, WlRounds::UntilStable);

        let perm = NodePermutation::new(vec![3, 1, 0, 2]).unwrap();
        let sigma = Relabeling::from_pairs_cycle_completed([
            (b"a".to_vec(), b"q".to_vec()),
            (b"b".to_vec(), b"r".to_vec()),
            (b"c".to_vec(), b"s".to_vec()),
        ]);
        let transformed = g.permuted(&perm).relabeled(&sigma);
        let other = wl_diff_refinement(&transformed, WlRounds::UntilStable);
        assert_eq!(base.digest, other.digest);
        assert_eq!(base.histogram, other.histogram);
    }

    #[test]
    fn wl_fixed_rounds_follow_the_budget() {
        let g = graph(&["a", "b", "a"], &[(0, 1), (1, 2)]);
        let one = wl_diff_refinement(&g, WlRounds::Fixed(1));
        assert_eq!(one.rounds, 1);
        let stable = wl_diff_refinement(&g, WlRounds::UntilStable);
        let beyond = wl_diff_refinement(&g, WlRounds::Fixed(5));
        assert_eq!(stable.digest, beyond.digest);
    }

    #[test]
    fn graph_construction_errors() {
        let features = vec![b"a".to_vec()];
        assert_eq!(
            Graph::new(features.clone(), &[(0, 0)]).unwrap_err(),
            GraphError::SelfLoop { node: 0 }
        );
        assert_eq!(
            Graph::new(features, &[(0, 1)]).unwrap_err(),
            GraphError::EdgeOutOfRange { node: 1, n: 1 }
        );
    }

    fn arbitrary_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (0..=max_n).prop_flat_map(|n| {
            let features =
                proptest::collection::vec(proptest::sample::select(vec!["a", "b", "c"]), n);
            let edges = proptest::collection::vec(any::<bool>(), n * n.saturating_sub(1) / 2);
            (features, edges).prop_map(move |(features, edge_bits)| {
                let mut edges = Vec::new();
                let mut bit = 0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if edge_bits[bit] {
                            edges.push((i, j));
                        }
                        bit += 1;
                    }
                }
                Graph::new(
                    features
                        .into_iter()
                        .map(|f| f.as_bytes().to_vec())
                        .collect(),
                    &edges,
                )
                .unwrap()
            })
        })
    }

    fn arbitrary_permutation(n: usize) -> impl Strategy<Value = NodePermutation> {
        Just((0..n).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_map(|map| NodePermutation::new(map).unwrap())
    }

    fn graph_with_permutation(max_n: usize) -> impl Strategy<Value = (Graph, NodePermutation)> {
        arbitrary_graph(max_n).prop_flat_map(|g| {
            let n = g.node_count();
            (Just(g), arbitrary_permutation(n))
        })
    }

    proptest! {
        #[test]
        fn difference_matrix_commutes_with_transformations(
            (g, perm) in graph_with_permutation(7),
        ) {
            let sigma = Relabeling::from_pairs_cycle_completed([
                (b"a".to_vec(), b"b".to_vec()),
                (b"b".to_vec(), b"c".to_vec()),
                (b"c".to_vec(), b"a".to_vec()),
            ]);
            let transformed = g.relabeled(&sigma).permuted(&perm);
            let original = difference_matrix(g.features());
            let moved = difference_matrix(transformed.features());
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    prop_assert_eq!(
                        moved.entry(perm.apply(i), perm.apply(j)),
                        original.entry(i, j)
                    );
                }
            }
        }

        #[test]
        fn hash_invariance_on_random_graphs((g, perm) in graph_with_permutation(7)) {
            let sigma = Relabeling::from_pairs_cycle_completed([
                (b"a".to_vec(), b"north".to_vec()),
                (b"b".to_vec(), b"south".to_vec()),
                (b"c".to_vec(), b"east".to_vec()),
            ]);
            let transformed = g.permuted(&perm).relabeled(&sigma);
            prop_assert_eq!(graph_hash(&transformed).unwrap(), graph_hash(&g).unwrap());
            let wl_a = wl_diff_refinement(&g, WlRounds::UntilStable);
            let wl_b = wl_diff_refinement(&transformed, WlRounds::UntilStable);
            prop_assert_eq!(wl_a.digest, wl_b.digest);
        }
    }
}
