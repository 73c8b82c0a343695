//! Seed mixing. Every random decision in the crate is a pure function of a
//! 64-bit seed and a few integer coordinates, so results never depend on the
//! order in which they are computed.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash an ordered tuple of words into one word.
#[inline]
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &w| mix64(acc ^ mix64(w)))
}

/// Seed namespaces. Attack randomness and construction randomness are drawn
/// from disjoint namespaces so an attack can never correlate with the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Namespace {
    Tournament = 0x746f_7572,
    Attack = 0x6174_7461,
    Copy = 0x636f_7079,
    Trial = 0x7472_6961,
    Sample = 0x7361_6d70,
}

/// Derive a seed for `ns` from a base seed and extra coordinates.
pub fn derive_seed(ns: Namespace, base: u64, coords: &[u64]) -> u64 {
    let mut words = Vec::with_capacity(coords.len() + 2);
    words.push(ns as u64);
    words.push(base);
    words.extend_from_slice(coords);
    hash_words(&words)
}
