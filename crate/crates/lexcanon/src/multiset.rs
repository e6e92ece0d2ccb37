//! Multisets of byte strings, their count signatures, and equivalence under
//! injective relabeling of the element space.
//!
//! Two multisets are equivalent when some injective map over byte strings
//! carries one onto the other. The multiset of multiplicities of distinct
//! elements (the count signature) is a complete invariant for that relation:
//! signatures are equal exactly when such a map exists, and
//! [`witness_relabeling`] produces the map explicitly.

use std::collections::BTreeMap;

use crate::encoding::{put_uint, sha256, Sha256Digest, SIGNATURE_TAG};

/// An unordered collection of byte strings, each with a multiplicity.
///
/// Construction order is unobservable: any two orders of the same elements
/// compare equal. Values are immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Multiset {
    counts: BTreeMap<Vec<u8>, usize>,
    len: usize,
}

impl Multiset {
    /// Builds a multiset from any sequence of byte strings.
    pub fn from_elements<I, T>(elements: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Vec<u8>>,
    {
        let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut len = 0;
        for e in elements {
            *counts.entry(e.into()).or_insert(0) += 1;
            len += 1;
        }
        Multiset { counts, len }
    }

    /// Total number of elements, counted with multiplicity.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of distinct elements.
    pub fn unique_count(&self) -> usize {
        self.counts.len()
    }

    /// Multiplicity of one element (zero if absent).
    pub fn multiplicity(&self, element: &[u8]) -> usize {
        self.counts.get(element).copied().unwrap_or(0)
    }

    /// Distinct elements in byte-lexicographic order, with multiplicities.
    pub fn iter(&self) -> impl Iterator<Item = (&[u8], usize)> {
        self.counts.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    /// Distinct elements in byte-lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = &[u8]> {
        self.counts.keys().map(|e| e.as_slice())
    }
}

impl<T: Into<Vec<u8>>> FromIterator<T> for Multiset {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Multiset::from_elements(iter)
    }
}

/// The multiset of multiplicities of a multiset's distinct elements,
/// kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountSignature {
    counts: Vec<u64>,
}

impl CountSignature {
    /// Builds a signature from multiplicities in any order. Zero counts are
    /// not representable and must not be passed.
    pub fn new<I: IntoIterator<Item = u64>>(counts: I) -> Self {
        let mut counts: Vec<u64> = counts.into_iter().collect();
        debug_assert!(counts.iter().all(|&c| c >= 1));
        counts.sort_unstable();
        CountSignature { counts }
    }

    /// Number of distinct elements in the source multiset.
    pub fn unique_count(&self) -> usize {
        self.counts.len()
    }

    /// Multiplicities in ascending order.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sum of all multiplicities: the source multiset's cardinality.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// An injective map over byte strings, stored as its non-identity pairs.
///
/// Everything outside the listed pairs maps to itself. Constructors keep the
/// whole function injective, not just the listed pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Relabeling {
    map: BTreeMap<Vec<u8>, Vec<u8>>,
}

impl Relabeling {
    /// The identity relabeling.
    pub fn identity() -> Self {
        Relabeling::default()
    }

    /// Extends a partial injective assignment to a globally injective map by
    /// closing each open chain of the assignment into a cycle.
    ///
    /// The pairs must themselves be injective (no two sources sharing a
    /// target). Targets that are not also sources would otherwise collide
    /// with their own identity images; each such target is redirected to the
    /// unmatched source that starts its chain, which permutes the union of
    /// sources and targets and leaves everything else fixed.
    pub fn from_pairs_cycle_completed<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u8>, Vec<u8>)>,
    {
        let map: BTreeMap<Vec<u8>, Vec<u8>> = pairs.into_iter().collect();
        let reverse: BTreeMap<&[u8], &[u8]> = map
            .iter()
            .map(|(from, to)| (to.as_slice(), from.as_slice()))
            .collect();
        assert_eq!(reverse.len(), map.len(), "pairs must be injective");

        let mut completed = map.clone();
        for to in map.values() {
            if map.contains_key(to) {
                continue;
            }
            // `to` ends an open chain; walk back to the chain's unmatched
            // start and close the cycle.
            let mut start = to.as_slice();
            while let Some(prev) = reverse.get(start) {
                start = prev;
            }
            completed.insert(to.clone(), start.to_vec());
        }

        completed.retain(|from, to| from != to);
        Relabeling { map: completed }
    }

    /// Non-identity pairs in byte-lexicographic source order.
    pub fn pairs(&self) -> impl Iterator<Item = (&[u8], &[u8])> {
        self.map.iter().map(|(f, t)| (f.as_slice(), t.as_slice()))
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    /// Image of one byte string.
    pub fn apply(&self, element: &[u8]) -> Vec<u8> {
        match self.map.get(element) {
            Some(image) => image.clone(),
            None => element.to_vec(),
        }
    }

    /// Elementwise image of a multiset.
    pub fn apply_multiset(&self, x: &Multiset) -> Multiset {
        Multiset::from_elements(
            x.iter()
                .flat_map(|(e, c)| std::iter::repeat_n(self.apply(e), c)),
        )
    }

    /// Checks that no two distinct probes share an image.
    pub fn is_injective_on<'a, I>(&self, probes: I) -> bool
    where
        I: IntoIterator<Item = &'a [u8]>,
    {
        let probes: std::collections::BTreeSet<&[u8]> = probes.into_iter().collect();
        let mut images = std::collections::BTreeSet::new();
        probes.iter().all(|p| images.insert(self.apply(p)))
    }
}

/// The multiset of multiplicities of distinct elements of `x`.
pub fn count_signature(x: &Multiset) -> CountSignature {
    CountSignature::new(x.iter().map(|(_, c)| c as u64))
}

/// The canonical representative of `x`'s equivalence class: decimal labels
/// `"1".."k"` where label `i` carries the i-th smallest multiplicity.
/// Two multisets map to equal results exactly when they are equivalent.
pub fn canonical_multiset(x: &Multiset) -> Multiset {
    let signature = count_signature(x);
    Multiset::from_elements(
        signature
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(index, &count)| {
                let label = (index + 1).to_string().into_bytes();
                std::iter::repeat_n(label, count as usize)
            }),
    )
}

/// Injective byte serialization of a count signature: the tag byte, the
/// number of entries, then the multiplicities in ascending order, each as a
/// length-prefixed big-endian integer. Equal bytes iff equal signatures.
pub fn encode_count_signature(signature: &CountSignature) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 + 3 * signature.unique_count());
    out.push(SIGNATURE_TAG);
    put_uint(&mut out, signature.unique_count() as u64);
    for &count in signature.counts() {
        put_uint(&mut out, count);
    }
    out
}

/// Digest of the encoded count signature. Invariant under any injective
/// relabeling of `x`'s elements; the encoded bytes carry the injectivity
/// contract, the digest is the fixed-width convenience layer.
pub fn multiset_hash(x: &Multiset) -> Sha256Digest {
    sha256(&encode_count_signature(&count_signature(x)))
}

/// Digest of the multiset's literal content: elements in byte-lexicographic
/// order, length-prefixed, with the cardinality up front. Order-invariant
/// but deliberately sensitive to relabeling; this is the feature-memorizing
/// baseline that salted anonymization breaks.
pub fn raw_multiset_hash(x: &Multiset) -> Sha256Digest {
    let mut out = Vec::new();
    put_uint(&mut out, x.len() as u64);
    for (element, count) in x.iter() {
        put_uint(&mut out, count as u64);
        put_uint(&mut out, element.len() as u64);
        out.extend_from_slice(element);
    }
    sha256(&out)
}

/// True iff some injective relabeling carries `x2` onto `x1`, decided by
/// comparing count signatures.
pub fn multisets_equivalent(x1: &Multiset, x2: &Multiset) -> bool {
    count_signature(x1) == count_signature(x2)
}

/// Produces an injective relabeling with `sigma(x2) = x1`, or `None` when
/// the multisets are not equivalent.
///
/// Distinct elements are paired across the two multisets in matching-count
/// order, ties broken by byte-lexicographic order, and the pairing is closed
/// into a permutation of the supports' union so the whole map stays
/// injective.
pub fn witness_relabeling(x1: &Multiset, x2: &Multiset) -> Option<Relabeling> {
    if !multisets_equivalent(x1, x2) {
        return None;
    }

    let by_count = |x: &Multiset| -> BTreeMap<usize, Vec<Vec<u8>>> {
        let mut groups: BTreeMap<usize, Vec<Vec<u8>>> = BTreeMap::new();
        for (element, count) in x.iter() {
            groups.entry(count).or_default().push(element.to_vec());
        }
        groups
    };

    let groups1 = by_count(x1);
    let groups2 = by_count(x2);
    let mut pairs = Vec::with_capacity(x2.unique_count());
    for (count, from_elements) in &groups2 {
        let to_elements = &groups1[count];
        pairs.extend(
            from_elements
                .iter()
                .cloned()
                .zip(to_elements.iter().cloned()),
        );
    }

    let sigma = Relabeling::from_pairs_cycle_completed(pairs);
    debug_assert_eq!(&sigma.apply_multiset(x2), x1);
    Some(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(elements: &[&str]) -> Multiset {
        Multiset::from_elements(elements.iter().map(|s| s.as_bytes().to_vec()))
    }

    #[test]
    fn count_signature_of_known_multisets() {
        assert_eq!(
            count_signature(&ms(&["1", "2", "3", "2"])),
            CountSignature::new([1, 1, 2])
        );
        assert_eq!(count_signature(&ms(&[])), CountSignature::new([]));
        assert_eq!(
            count_signature(&ms(&["a", "a", "b"])),
            CountSignature::new([1, 2])
        );
    }

    #[test]
    fn canonical_multiset_relabels_by_ascending_count() {
        assert_eq!(
            canonical_multiset(&ms(&["a", "b", "c", "b"])),
            ms(&["1", "2", "3", "3"])
        );
        assert_eq!(canonical_multiset(&ms(&[])), ms(&[]));
        assert_eq!(
            canonical_multiset(&ms(&["x", "x", "x"])),
            ms(&["1", "1", "1"])
        );
    }

    #[test]
    fn canonical_multiset_equal_iff_equivalent_on_samples() {
        let a = ms(&["1", "2", "3", "2"]);
        let b = ms(&["a", "b", "c", "b"]);
        let c = ms(&["a", "b", "c"]);
        assert_eq!(canonical_multiset(&a), canonical_multiset(&b));
        assert_ne!(canonical_multiset(&a), canonical_multiset(&c));
    }

    #[test]
    fn signature_encoding_bytes_are_pinned() {
        let sig = CountSignature::new([1, 1, 2]);
        assert_eq!(
            encode_count_signature(&sig),
            vec![0x4D, 0x01, 0x03, 0x01, 0x01, 0x01, 0x01, 0x01, 0x02]
        );
        assert_eq!(
            encode_count_signature(&CountSignature::new([])),
            vec![0x4D, 0x00]
        );
        // Multiset equality of counts: same bytes regardless of input order.
        assert_eq!(
            encode_count_signature(&CountSignature::new([2, 1, 1])),
            encode_count_signature(&CountSignature::new([1, 1, 2]))
        );
    }

    #[test]
    fn encoding_is_collision_free_for_small_signatures() {
        // Exhaustive over k <= 4, counts in 1..=4.
        use itertools::Itertools;
        let mut seen = std::collections::BTreeMap::new();
        for k in 0..=4usize {
            for combo in (1..=4u64).combinations_with_replacement(k) {
                let sig = CountSignature::new(combo);
                let bytes = encode_count_signature(&sig);
                if let Some(prev) = seen.insert(bytes, sig.clone()) {
                    panic!("collision between {prev:?} and {sig:?}");
                }
            }
        }
        assert_eq!(seen.len(), 1 + 4 + 10 + 20 + 35);
    }

    #[test]
    fn hash_matches_for_equivalent_multisets() {
        assert_eq!(
            multiset_hash(&ms(&["1", "2", "3", "2"])),
            multiset_hash(&ms(&["a", "b", "c", "b"]))
        );
    }

    #[test]
    fn hash_of_empty_multiset_is_digest_of_empty_signature() {
        let expected = sha256(&encode_count_signature(&CountSignature::new([])));
        assert_eq!(multiset_hash(&ms(&[])), expected);
        assert_eq!(
            hex::encode(expected),
            "fcfcd4ecebe43ba403cb968bafa849a96f301ace87357a2e235ceb06dc226947"
        );
    }

    #[test]
    fn hash_distinguishes_different_signatures() {
        // Signatures {1,2} vs {1,1,1}: encodings differ byte-wise, so the
        // digests may be relied on to differ.
        let e1 = encode_count_signature(&count_signature(&ms(&["a", "a", "b"])));
        let e2 = encode_count_signature(&count_signature(&ms(&["a", "b", "c"])));
        assert_ne!(e1, e2);
        assert_ne!(
            multiset_hash(&ms(&["a", "a", "b"])),
            multiset_hash(&ms(&["a", "b", "c"]))
        );
    }

    #[test]
    fn equivalence_on_known_pairs() {
        assert!(multisets_equivalent(
            &ms(&["1", "2", "3", "2"]),
            &ms(&["a", "b", "c", "b"])
        ));
        assert!(multisets_equivalent(
            &ms(&["a", "a", "b"]),
            &ms(&["b", "b", "c"])
        ));
        assert!(!multisets_equivalent(
            &ms(&["a", "a", "b"]),
            &ms(&["a", "b", "c"])
        ));
    }

    #[test]
    fn witness_reproduces_the_three_cycle() {
        let x1 = ms(&["b", "b", "c"]);
        let x2 = ms(&["a", "a", "b"]);
        let sigma = witness_relabeling(&x1, &x2).unwrap();
        assert_eq!(sigma.apply(b"a"), b"b".to_vec());
        assert_eq!(sigma.apply(b"b"), b"c".to_vec());
        assert_eq!(sigma.apply(b"c"), b"a".to_vec());
        assert_eq!(sigma.apply_multiset(&x2), x1);
    }

    #[test]
    fn witness_on_equal_multisets_is_identity() {
        let x = ms(&["a"]);
        let sigma = witness_relabeling(&x, &x).unwrap();
        assert!(sigma.is_identity());
    }

    #[test]
    fn witness_completes_cycles_over_overlapping_supports() {
        let x1 = ms(&["q", "r"]);
        let x2 = ms(&["p", "q"]);
        let sigma = witness_relabeling(&x1, &x2).unwrap();
        assert_eq!(sigma.apply_multiset(&x2), x1);
        assert_eq!(sigma.apply(b"p"), b"q".to_vec());
        assert_eq!(sigma.apply(b"q"), b"r".to_vec());
        assert_eq!(sigma.apply(b"r"), b"p".to_vec());
        assert!(sigma.is_injective_on([b"p".as_slice(), b"q", b"r"]));
    }

    #[test]
    fn witness_returns_none_for_inequivalent_inputs() {
        assert!(witness_relabeling(&ms(&["a", "a", "b"]), &ms(&["a", "b", "c"])).is_none());
        assert!(witness_relabeling(&ms(&["a"]), &ms(&["a", "a"])).is_none());
    }

    #[test]
    fn raw_hash_separates_relabelings_that_share_a_signature() {
        let a = ms(&["a", "a", "b"]);
        let b = ms(&["b", "b", "c"]);
        assert_ne!(raw_multiset_hash(&a), raw_multiset_hash(&b));
        assert_eq!(multiset_hash(&a), multiset_hash(&b));
    }

    /// Strategy: a multiset over a tiny alphabet, so collisions and repeats
    /// are common.
    fn small_multiset() -> impl Strategy<Value = Multiset> {
        proptest::collection::vec(proptest::sample::select(vec!["a", "b", "c", "d"]), 0..12)
            .prop_map(|v| Multiset::from_elements(v.into_iter().map(|s| s.as_bytes().to_vec())))
    }

    /// A random injective relabeling built as a permutation of a pool that
    /// covers the multiset alphabet.
    fn pool_permutation() -> impl Strategy<Value = Relabeling> {
        let pool: Vec<&str> = vec!["a", "b", "c", "d", "e", "zz"];
        Just(pool.clone()).prop_shuffle().prop_map(move |shuffled| {
            Relabeling::from_pairs_cycle_completed(
                pool.iter()
                    .zip(shuffled.iter())
                    .map(|(f, t)| (f.as_bytes().to_vec(), t.as_bytes().to_vec())),
            )
        })
    }

    proptest! {
        #[test]
        fn hash_is_invariant_under_injective_relabeling(
            x in small_multiset(),
            sigma in pool_permutation(),
        ) {
            let relabeled = sigma.apply_multiset(&x);
            prop_assert_eq!(multiset_hash(&relabeled), multiset_hash(&x));
            prop_assert!(multisets_equivalent(&x, &relabeled));
        }

        #[test]
        fn signature_total_matches_cardinality(x in small_multiset()) {
            prop_assert_eq!(count_signature(&x).total(), x.len() as u64);
        }

        #[test]
        fn witness_is_sound_on_equivalent_pairs(
            x2 in small_multiset(),
            sigma in pool_permutation(),
        ) {
            let x1 = sigma.apply_multiset(&x2);
            let witness = witness_relabeling(&x1, &x2).expect("equivalent by construction");
            prop_assert_eq!(witness.apply_multiset(&x2), x1.clone());
            let union: Vec<&[u8]> = x1.support().chain(x2.support()).collect();
            prop_assert!(witness.is_injective_on(union));
        }
    }
}
