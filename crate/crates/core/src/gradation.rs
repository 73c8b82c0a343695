//! Random elimination tournament and the nested level sets it induces.
//!
//! Leaves of a full binary tree hold the values `1..=n_padded`. Every internal
//! node copies the value of one of its two children, chosen by a fair coin.
//! `P_i` is the set of values stored at height `i`, so `P_0` is everything and
//! the root level is a singleton.

use crate::error::{Error, Result};
use crate::hash::{derive_seed, mix64, Namespace};

/// Vertices are the integers `1..=n`.
pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gradation {
    n_padded: usize,
    n: usize,
    seed: u64,
    /// `level_of[v - 1]` is the highest level reached by `v`.
    level_of: Vec<u8>,
    /// Padded members of each level, ascending.
    levels: Vec<Vec<Vertex>>,
}

/// The coin of internal node `(level, index)`; `true` selects the right child.
#[inline]
pub fn tournament_coin(seed: u64, level: u32, index: usize) -> bool {
    let base = derive_seed(Namespace::Tournament, seed, &[]);
    mix64(base ^ ((level as u64) << 48) ^ index as u64) & 1 == 1
}

impl Gradation {
    pub fn build(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("gradation needs n >= 1"));
        }
        let n_padded = n.next_power_of_two();
        let height = n_padded.trailing_zeros();
        let base = derive_seed(Namespace::Tournament, seed, &[]);

        let mut level_of = vec![0u8; n_padded];
        let mut winners: Vec<Vertex> = (1..=n_padded).collect();
        for level in 1..=height {
            winners = winners
                .chunks_exact(2)
                .enumerate()
                .map(|(t, pair)| {
                    let right = mix64(base ^ ((level as u64) << 48) ^ t as u64) & 1 == 1;
                    let w = if right { pair[1] } else { pair[0] };
                    level_of[w - 1] = level as u8;
                    w
                })
                .collect();
        }
        Ok(Self::from_levels(n, n_padded, seed, level_of))
    }

    fn from_levels(n: usize, n_padded: usize, seed: u64, level_of: Vec<u8>) -> Self {
        let height = n_padded.trailing_zeros() as usize;
        let mut levels = vec![Vec::new(); height + 1];
        for (idx, &lv) in level_of.iter().enumerate() {
            for members in levels.iter_mut().take(lv as usize + 1) {
                members.push(idx + 1);
            }
        }
        Gradation {
            n_padded,
            n,
            seed,
            level_of,
            levels,
        }
    }

    /// Rebuild from a serialized level map, checking the tournament invariants.
    pub fn from_parts(n: usize, seed: u64, level_of: Vec<u8>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("gradation needs n >= 1"));
        }
        let n_padded = n.next_power_of_two();
        if level_of.len() != n_padded {
            return Err(Error::invalid(format!(
                "level map has {} entries, expected {n_padded}",
                level_of.len()
            )));
        }
        let g = Self::from_levels(n, n_padded, seed, level_of);
        g.check_tournament()?;
        Ok(g)
    }

    fn check_tournament(&self) -> Result<()> {
        for i in 0..=self.height() {
            let block = 1usize << i;
            let mut counts = vec![0usize; self.n_padded / block];
            for &v in &self.levels[i] {
                counts[(v - 1) / block] += 1;
            }
            if counts.iter().any(|&c| c != 1) {
                return Err(Error::invalid(format!(
                    "level {i} does not hold exactly one vertex per aligned block"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_padded(&self) -> usize {
        self.n_padded
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `log2(n_padded)`, the index of the singleton level.
    pub fn height(&self) -> usize {
        self.n_padded.trailing_zeros() as usize
    }

    pub fn level_of(&self, v: Vertex) -> usize {
        self.level_of[v - 1] as usize
    }

    pub fn level_map(&self) -> &[u8] {
        &self.level_of
    }

    pub fn contains(&self, i: usize, v: Vertex) -> bool {
        self.level_of(v) >= i
    }

    /// `P_i` ascending. With `trimmed`, padding vertices above `n` are dropped;
    /// they always form a suffix of the padded list.
    pub fn members(&self, i: usize, trimmed: bool) -> Result<&[Vertex]> {
        if i > self.height() {
            return Err(Error::invalid(format!(
                "level {i} out of range 0..={}",
                self.height()
            )));
        }
        Ok(self.level_slice(i, trimmed))
    }

    pub(crate) fn level_slice(&self, i: usize, trimmed: bool) -> &[Vertex] {
        let all = &self.levels[i];
        if trimmed {
            &all[..all.partition_point(|&v| v <= self.n)]
        } else {
            all
        }
    }

    /// Zero-based rank of `v` inside trimmed `P_i`, if it is a member.
    pub fn rank(&self, i: usize, v: Vertex) -> Option<usize> {
        if v == 0 || v > self.n || !self.contains(i, v) {
            return None;
        }
        self.levels[i].binary_search(&v).ok()
    }

    /// Number of members of trimmed `P_i` in the closed range `[lo, hi]`.
    pub fn count_in(&self, i: usize, lo: Vertex, hi: Vertex) -> usize {
        let m = self.level_slice(i, true);
        let a = m.partition_point(|&v| v < lo);
        let b = m.partition_point(|&v| v <= hi);
        b.saturating_sub(a)
    }
}
