//! Exact canonical labeling of complete edge-colored graphs.
//!
//! The carrier structure is a complete graph on `n` nodes whose unordered
//! pairs carry a color in `0..=3`. [`canonical_form`] returns a node order
//! whose serialization is the byte-lexicographic minimum over all `n!`
//! orders, so two colored graphs serialize identically exactly when one is a
//! relabeling of the other.
//!
//! The search fills canonical positions left to right. Placing a node at
//! position `t` contributes its stable refinement rank and its colors toward
//! the `t` already-placed nodes, and those bytes precede everything decided
//! later, so only nodes minimal on (rank, color vector) can start a minimal
//! completion — on irregular graphs the rank alone pins the whole order.
//! Remaining ties are real branches; they are cut by comparing partial
//! serializations against the best leaf found, by skipping siblings that
//! are twins (identical color rows) of an already-explored choice, and by
//! closing the order outright once the unplaced remainder is
//! color-homogeneous.
//!
//! Ties that survive all of that are where graph symmetry lives: two leaves
//! with equal bytes differ by an automorphism. Each such automorphism is
//! recorded, and a sibling branch is skipped when a recorded automorphism
//! (or a product of them) fixes the placed prefix pointwise and maps an
//! explored sibling onto it, since the skipped subtree can only replay the
//! explored one's serializations. Without this, uniformly-colored rings and
//! similar structures degenerate to factorial search.

use thiserror::Error;

use crate::graph::NodePermutation;

/// Number of distinct edge colors.
pub const COLOR_COUNT: usize = 4;

/// Largest admissible color value.
pub const MAX_COLOR: u8 = (COLOR_COUNT - 1) as u8;

/// Node count exceeded the configured guard; the exact search refuses
/// rather than silently degrading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("graph has {n} nodes, exceeding the node guard of {guard}")]
pub struct SizeGuardError {
    pub n: usize,
    pub guard: usize,
}

/// A complete graph with a color in `0..=3` on every unordered node pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeColoredGraph {
    n: usize,
    colors: Vec<u8>,
}

impl EdgeColoredGraph {
    /// Builds the graph from a symmetric color function over distinct pairs.
    pub fn from_fn<F: Fn(usize, usize) -> u8>(n: usize, color: F) -> Self {
        let mut colors = vec![0u8; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = color(i, j);
                assert!(c <= MAX_COLOR, "color {c} out of range");
                colors[i * n + j] = c;
                colors[j * n + i] = c;
            }
        }
        EdgeColoredGraph { n, colors }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Color of the pair `{i, j}`, `i != j`.
    pub fn color(&self, i: usize, j: usize) -> u8 {
        debug_assert_ne!(i, j);
        self.colors[i * self.n + j]
    }
}

/// Byte emitted per color, chosen per graph. In sparse graphs edge colors
/// (odd values under the `adjacency + 2 * same_block` packing) sort first,
/// in dense graphs non-edge colors do, so minimal prefixes grow through the
/// rarer pair kind either way. Tied prefixes are then forced to share their
/// whole induced pattern, which makes them genuine symmetries on structured
/// inputs instead of an exponential frontier of interchangeable-looking
/// subsets. Density is isomorphism-invariant, so relabeled copies agree.
///
/// Returns the selected table and its identifying byte; the byte leads every
/// serialization so streams produced under different tables never compare
/// equal.
fn color_sort_keys(g: &EdgeColoredGraph) -> (u8, [u8; COLOR_COUNT]) {
    let mut edges = 0usize;
    for i in 0..g.n {
        for j in (i + 1)..g.n {
            edges += usize::from(g.color(i, j) & 1 == 1);
        }
    }
    if 2 * edges > g.n * g.n.saturating_sub(1) / 2 {
        // Dense: non-edge colors first, same-block before different-block.
        (1, [1, 3, 0, 2])
    } else {
        // Sparse: edge colors first, same-block before different-block.
        (0, [3, 1, 2, 0])
    }
}

/// A node's recoloring key: own rank plus the sorted (rank, color) view of
/// all other nodes.
type RankKey = (u16, Vec<(u16, u8)>);

/// Stable color-refinement rank of every node: start uniform, repeatedly
/// recolor by the multiset of (neighbor rank, pair color) over all other
/// nodes, with fresh ranks assigned in sorted-key order. Label-free, so the
/// ranks of relabeled copies correspond under the relabeling.
fn refinement_ranks(g: &EdgeColoredGraph) -> Vec<u16> {
    let n = g.n;
    assert!(n <= usize::from(u16::MAX) + 1, "rank width exceeded");
    let mut ranks = vec![0u16; n];
    let mut distinct = usize::from(n > 0);
    loop {
        let keys: Vec<RankKey> = (0..n)
            .map(|u| {
                let mut seen: Vec<(u16, u8)> = (0..n)
                    .filter(|&v| v != u)
                    .map(|v| (ranks[v], g.color(u, v)))
                    .collect();
                seen.sort_unstable();
                (ranks[u], seen)
            })
            .collect();
        let mut rank_of: std::collections::BTreeMap<&RankKey, u16> =
            std::collections::BTreeMap::new();
        for key in &keys {
            rank_of.insert(key, 0);
        }
        let new_distinct = rank_of.len();
        for (rank, (_, slot)) in rank_of.iter_mut().enumerate() {
            *slot = rank as u16;
        }
        ranks = keys.iter().map(|key| rank_of[key]).collect();
        if new_distinct == distinct {
            return ranks;
        }
        distinct = new_distinct;
    }
}

/// Serialization of the graph under a node order, where `order[p]` is the
/// node placed at canonical position `p`: the key-table byte, then for each
/// position the node's refinement rank (two bytes, big-endian) followed by
/// its color keys toward all earlier positions.
///
/// This is the total order minimized by [`canonical_form`]; the brute-force
/// oracle evaluates the same function over every permutation. Since the
/// rank bytes of a position precede its color bytes, minimal orders list
/// nodes by ascending refinement rank and use the colors only to break
/// ties, which is what lets the search branch within one rank class at a
/// time.
pub fn serialize_in_order(g: &EdgeColoredGraph, order: &[usize]) -> Vec<u8> {
    debug_assert_eq!(order.len(), g.n);
    let (table, keys) = color_sort_keys(g);
    let ranks = refinement_ranks(g);
    let mut out = Vec::with_capacity(1 + g.n * (g.n.saturating_sub(1)) / 2 + 2 * g.n);
    out.push(table);
    for q in 0..g.n {
        out.extend_from_slice(&ranks[order[q]].to_be_bytes());
        for p in 0..q {
            out.push(keys[g.color(order[p], order[q]) as usize]);
        }
    }
    out
}

/// An ordered partition of `0..n` into disjoint nonempty cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedPartition {
    cells: Vec<Vec<usize>>,
    n: usize,
}

impl OrderedPartition {
    /// The partition with a single cell holding all nodes.
    pub fn unit(n: usize) -> Self {
        if n == 0 {
            return OrderedPartition { cells: vec![], n };
        }
        OrderedPartition {
            cells: vec![(0..n).collect()],
            n,
        }
    }

    /// The all-singletons partition.
    pub fn discrete(n: usize) -> Self {
        OrderedPartition {
            cells: (0..n).map(|v| vec![v]).collect(),
            n,
        }
    }

    /// Builds a partition from explicit cells, which must be disjoint,
    /// nonempty, and cover `0..n`. Cell order is preserved; nodes within a
    /// cell are kept sorted.
    pub fn new(n: usize, cells: Vec<Vec<usize>>) -> Self {
        let mut seen = vec![false; n];
        let mut total = 0;
        let mut sorted_cells = cells;
        for cell in &mut sorted_cells {
            assert!(!cell.is_empty(), "empty cell");
            cell.sort_unstable();
            for &v in cell.iter() {
                assert!(v < n && !seen[v], "cell element {v} invalid or repeated");
                seen[v] = true;
                total += 1;
            }
        }
        assert_eq!(total, n, "cells must cover all nodes");
        OrderedPartition {
            cells: sorted_cells,
            n,
        }
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_discrete(&self) -> bool {
        self.cells.iter().all(|c| c.len() == 1)
    }

    /// True when `self` refines `coarser`: every cell of `self` lies inside
    /// one cell of `coarser`.
    pub fn refines(&self, coarser: &OrderedPartition) -> bool {
        let mut cell_of = vec![usize::MAX; self.n];
        for (index, cell) in coarser.cells.iter().enumerate() {
            for &v in cell {
                cell_of[v] = index;
            }
        }
        self.cells
            .iter()
            .all(|cell| cell.iter().all(|&v| cell_of[v] == cell_of[cell[0]]))
    }
}

/// Coarsest equitable refinement of `p`: repeatedly splits cells whose
/// members disagree on their per-color incidence counts toward some cell,
/// until every cell is uniform toward every cell. Fragments replace their
/// cell in ascending order of that count profile, so the result is
/// independent of input cell member order. Refining the output again
/// returns it unchanged.
pub fn refine(g: &EdgeColoredGraph, p: &OrderedPartition) -> OrderedPartition {
    let n = g.node_count();
    debug_assert_eq!(n, p.node_count());
    let mut cells = p.cells().to_vec();

    loop {
        let mut cell_of = vec![0usize; n];
        for (index, cell) in cells.iter().enumerate() {
            for &v in cell {
                cell_of[v] = index;
            }
        }

        let profile = |u: usize| -> Vec<u32> {
            let mut counts = vec![0u32; cells.len() * COLOR_COUNT];
            for v in 0..n {
                if v != u {
                    counts[cell_of[v] * COLOR_COUNT + g.color(u, v) as usize] += 1;
                }
            }
            counts
        };

        let mut next: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
        let mut split = false;
        for cell in &cells {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let mut groups: std::collections::BTreeMap<Vec<u32>, Vec<usize>> =
                std::collections::BTreeMap::new();
            for &u in cell {
                groups.entry(profile(u)).or_default().push(u);
            }
            if groups.len() > 1 {
                split = true;
            }
            next.extend(groups.into_values());
        }

        cells = next;
        if !split {
            return OrderedPartition::new(n, cells);
        }
    }
}

/// Most automorphism generators retained for orbit pruning. Pruning stays
/// sound with any subset; the cap only bounds memory and per-node work.
const AUTOMORPHISM_CAP: usize = 256;

/// Canonical node order search state.
struct Search<'a> {
    g: &'a EdgeColoredGraph,
    keys: [u8; COLOR_COUNT],
    ranks: Vec<u16>,
    order: Vec<usize>,
    placed: Vec<bool>,
    acc: Vec<u8>,
    best: Option<(Vec<u8>, Vec<usize>)>,
    automorphisms: Vec<Vec<usize>>,
}

impl<'a> Search<'a> {
    fn new(g: &'a EdgeColoredGraph) -> Self {
        let (table, keys) = color_sort_keys(g);
        let mut acc = Vec::with_capacity(1 + g.n * g.n.saturating_sub(1) / 2 + 2 * g.n);
        acc.push(table);
        Search {
            g,
            keys,
            ranks: refinement_ranks(g),
            order: Vec::with_capacity(g.n),
            placed: vec![false; g.n],
            acc,
            best: None,
            automorphisms: Vec::new(),
        }
    }

    fn key(&self, i: usize, j: usize) -> u8 {
        self.keys[self.g.color(i, j) as usize]
    }

    fn remaining(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.g.n).filter(|&u| !self.placed[u])
    }

    /// True when every unplaced pair shares one color and every placed node
    /// sees all unplaced nodes through one color. Any arrangement of the
    /// remainder then serializes identically.
    fn rest_is_homogeneous(&self) -> bool {
        let rest: Vec<usize> = self.remaining().collect();
        if rest.len() <= 1 {
            return true;
        }
        let within = self.g.color(rest[0], rest[1]);
        for (index, &u) in rest.iter().enumerate() {
            for &v in &rest[index + 1..] {
                if self.g.color(u, v) != within {
                    return false;
                }
            }
        }
        for &p in &self.order {
            let toward = self.g.color(p, rest[0]);
            if rest[1..].iter().any(|&u| self.g.color(p, u) != toward) {
                return false;
            }
        }
        true
    }

    /// `acc` is worse than the incumbent best on the bytes decided so far.
    fn prefix_beaten(&self) -> bool {
        match &self.best {
            Some((best, _)) => self.acc.as_slice() > &best[..self.acc.len()],
            None => false,
        }
    }

    fn place(&mut self, u: usize) {
        self.acc.extend_from_slice(&self.ranks[u].to_be_bytes());
        for p in 0..self.order.len() {
            self.acc.push(self.key(self.order[p], u));
        }
        self.order.push(u);
        self.placed[u] = true;
    }

    fn unplace(&mut self) {
        let u = self.order.pop().expect("unbalanced unplace");
        self.placed[u] = false;
        self.acc.truncate(self.acc.len() - self.order.len() - 2);
    }

    fn record_leaf(&mut self) {
        debug_assert_eq!(self.order.len(), self.g.n);
        match &self.best {
            None => self.best = Some((self.acc.clone(), self.order.clone())),
            Some((best, best_order)) => {
                if self.acc < *best {
                    self.best = Some((self.acc.clone(), self.order.clone()));
                } else if self.acc == *best && self.automorphisms.len() < AUTOMORPHISM_CAP {
                    // Equal bytes mean the two orders differ by a color
                    // automorphism; keep it as a pruning generator. Earlier
                    // generators stay valid when the best leaf changes.
                    let mut gamma = vec![0usize; self.g.n];
                    for (position, &node) in best_order.iter().enumerate() {
                        gamma[node] = self.order[position];
                    }
                    debug_assert!(self.is_automorphism(&gamma));
                    if !self.automorphisms.contains(&gamma) {
                        self.automorphisms.push(gamma);
                    }
                }
            }
        }
    }

    fn is_automorphism(&self, gamma: &[usize]) -> bool {
        (0..self.g.n).all(|i| {
            (i + 1..self.g.n).all(|j| self.g.color(gamma[i], gamma[j]) == self.g.color(i, j))
        })
    }

    fn run(&mut self) {
        if self.order.len() == self.g.n {
            self.record_leaf();
            return;
        }

        if self.rest_is_homogeneous() {
            // All arrangements of the rest share their color bytes, so the
            // ascending rank order is the minimal completion.
            let mut rest: Vec<usize> = self.remaining().collect();
            rest.sort_unstable_by_key(|&u| (self.ranks[u], u));
            for &u in &rest {
                self.place(u);
            }
            if !self.prefix_beaten() {
                self.record_leaf();
            }
            for _ in &rest {
                self.unplace();
            }
            return;
        }

        // This position's bytes are the candidate's rank followed by its
        // color keys toward the placed prefix; only nodes minimal on that
        // pair can start a minimal completion, everything else is dominated
        // on the very bytes this position contributes.
        let min_rank = self
            .remaining()
            .map(|u| self.ranks[u])
            .min()
            .expect("remainder is nonempty");
        let mut group: Vec<usize> = Vec::new();
        let mut min_vector: Option<Vec<u8>> = None;
        for u in 0..self.g.n {
            if self.placed[u] || self.ranks[u] != min_rank {
                continue;
            }
            let vector: Vec<u8> = self.order.iter().map(|&p| self.key(p, u)).collect();
            match &min_vector {
                None => {
                    min_vector = Some(vector);
                    group.push(u);
                }
                Some(current) => match vector.cmp(current) {
                    std::cmp::Ordering::Less => {
                        min_vector = Some(vector);
                        group.clear();
                        group.push(u);
                    }
                    std::cmp::Ordering::Equal => group.push(u),
                    std::cmp::Ordering::Greater => {}
                },
            }
        }

        let mut tried: Vec<usize> = Vec::new();
        for &u in &group {
            // Swapping two nodes with identical color rows is an
            // automorphism, so a twin of an explored sibling reaches only
            // serializations the sibling already produced.
            let is_twin_of_tried = tried.iter().any(|&v| {
                (0..self.g.n).all(|w| w == u || w == v || self.g.color(u, w) == self.g.color(v, w))
            });
            if is_twin_of_tried {
                continue;
            }
            // Same for any recorded automorphism product that fixes the
            // prefix and carries an explored sibling onto this one.
            // Recomputed per candidate: sibling subtrees discover new
            // generators as they run.
            if !tried.is_empty() && self.orbit_reaches(u, &tried) {
                continue;
            }
            tried.push(u);

            self.place(u);
            if !self.prefix_beaten() {
                self.run();
            }
            self.unplace();
        }
    }

    /// True when `u` lies in the orbit of some explored sibling under the
    /// subgroup generated by recorded automorphisms that fix the placed
    /// prefix pointwise.
    fn orbit_reaches(&self, u: usize, tried: &[usize]) -> bool {
        let mut parent: Vec<usize> = (0..self.g.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut any_fixing = false;
        for gamma in &self.automorphisms {
            if self.order.iter().any(|&p| gamma[p] != p) {
                continue;
            }
            any_fixing = true;
            for (v, &image) in gamma.iter().enumerate() {
                let a = find(&mut parent, v);
                let b = find(&mut parent, image);
                if a != b {
                    parent[a] = b;
                }
            }
        }
        if !any_fixing {
            return false;
        }
        let root = find(&mut parent, u);
        tried.iter().any(|&v| find(&mut parent, v) == root)
    }
}

/// Minimal-serialization node order of `g`: returns the permutation sending
/// each node to its canonical position together with the minimal
/// serialization bytes. Relabeled copies of a graph always produce
/// byte-identical serializations.
pub fn canonical_form(
    g: &EdgeColoredGraph,
    guard: usize,
) -> Result<(NodePermutation, Vec<u8>), SizeGuardError> {
    if g.n > guard {
        return Err(SizeGuardError { n: g.n, guard });
    }
    if g.n == 0 {
        return Ok((NodePermutation::identity(0), serialize_in_order(g, &[])));
    }

    let mut search = Search::new(g);
    search.run();
    let (bytes, order) = search.best.expect("search visits at least one leaf");

    let mut position_of = vec![0usize; g.n];
    for (position, &node) in order.iter().enumerate() {
        position_of[node] = position;
    }
    let perm = NodePermutation::new(position_of).expect("search order is a bijection");
    Ok((perm, bytes))
}

/// The canonical permutation alone; see [`canonical_form`].
pub fn canonical_permutation(
    g: &EdgeColoredGraph,
    guard: usize,
) -> Result<NodePermutation, SizeGuardError> {
    canonical_form(g, guard).map(|(perm, _)| perm)
}
