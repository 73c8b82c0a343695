//! The one-dimensional construction: every member of `P_i` is joined to its
//! `c(i)` nearest successors and predecessors inside `P_i`, for levels
//! `0..=M`. Edges are kept implicitly as (level set, reach) pairs; the rule
//! determines every `E_i`, so nothing is materialized unless asked for.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradation::{Gradation, Vertex};

/// Constant from the reliability proof; the guarantee needs at least this.
pub const DEFAULT_C_CONST: f64 = 2048.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params1D {
    pub n: usize,
    pub rho: f64,
    pub delta: Option<f64>,
    pub c_const: f64,
    /// Shadow baseline `1 - rho/8`.
    pub sp: f64,
    pub eps_step: f64,
    /// Top connected level `M`.
    pub top_level: usize,
    /// `M = 0`: the construction is one clique on `[n]`.
    pub degenerate: bool,
}

impl Params1D {
    pub fn derive(n: usize, rho: f64, delta: Option<f64>, c_const: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if !(rho > 0.0 && rho < 0.5) {
            return Err(Error::invalid(format!("rho = {rho} not in (0, 1/2)")));
        }
        if let Some(d) = delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::invalid(format!("delta = {d} not in (0, 1)")));
            }
        }
        if !(c_const >= 1.0 && c_const.is_finite()) {
            return Err(Error::invalid(format!("c_const = {c_const} must be >= 1")));
        }
        let log_terms = (1.0 / rho).ln() + delta.map_or(0.0, |d| (1.0 / d).ln());
        let eps_step = rho / (c_const * log_terms);
        let n_padded = n.next_power_of_two();
        let height = n_padded.trailing_zeros() as usize;
        let top_level = top_level_for(n_padded, eps_step).min(height);
        Ok(Params1D {
            n,
            rho,
            delta,
            c_const,
            sp: 1.0 - rho / 8.0,
            eps_step,
            top_level,
            degenerate: top_level == 0,
        })
    }

    /// `c(i) = ceil(2^{i/2} / eps)`, saturating.
    pub fn conn(&self, level: usize) -> u64 {
        conn_for(self.eps_step, level)
    }

    pub fn is_probabilistic(&self) -> bool {
        self.delta.is_some()
    }
}

pub fn conn_for(eps_step: f64, level: usize) -> u64 {
    (2f64.powf(level as f64 / 2.0) / eps_step).ceil() as u64
}

/// Smallest `M` with `n / 2^M <= 2^{M/2} / eps`, i.e. `n * eps <= 2^{3M/2}`.
pub fn top_level_for(n: usize, eps_step: f64) -> usize {
    let target = n as f64 * eps_step;
    (0..).find(|&m| target <= 2f64.powf(1.5 * m as f64)).unwrap()
}

/// Number of pairs at rank distance at most `c` along a path of `m` vertices.
pub fn pairs_within_reach(m: u64, c: u64) -> u64 {
    if m > c {
        c * m - c * (c + 1) / 2
    } else {
        m * m.saturating_sub(1) / 2
    }
}

/// A graph on `[n]` that monotone-path queries can walk.
pub trait LineGraph {
    fn n(&self) -> usize;

    fn has_edge(&self, u: Vertex, v: Vertex) -> bool;

    /// Calls `f` on every `y > x` adjacent to `x`, possibly more than once.
    fn for_each_forward(&self, x: Vertex, f: &mut dyn FnMut(Vertex));

    /// `true` when every pair is adjacent.
    fn is_complete(&self) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCount {
    pub per_level: Vec<u64>,
    /// Sum over levels; a pair present on several levels counts once per level.
    pub total: u64,
}

#[derive(Debug, Clone)]
pub struct Spanner1D {
    gradation: Gradation,
    params: Params1D,
    conn: Vec<u64>,
}

impl Spanner1D {
    pub fn build(gradation: Gradation, params: Params1D) -> Result<Self> {
        if gradation.n() != params.n {
            return Err(Error::invalid(format!(
                "gradation has n = {}, parameters have n = {}",
                gradation.n(),
                params.n
            )));
        }
        if params.top_level > gradation.height() {
            return Err(Error::invalid("top level above the tournament root"));
        }
        let conn = (0..=params.top_level).map(|i| params.conn(i)).collect();
        Ok(Spanner1D {
            gradation,
            params,
            conn,
        })
    }

    /// Convenience: derive parameters and build with a fresh tournament.
    pub fn construct(
        n: usize,
        rho: f64,
        delta: Option<f64>,
        c_const: f64,
        seed: u64,
    ) -> Result<Self> {
        let params = Params1D::derive(n, rho, delta, c_const)?;
        Self::build(Gradation::build(n, seed)?, params)
    }

    pub fn gradation(&self) -> &Gradation {
        &self.gradation
    }

    pub fn params(&self) -> &Params1D {
        &self.params
    }

    pub fn top_level(&self) -> usize {
        self.params.top_level
    }

    pub fn conn(&self, level: usize) -> Option<u64> {
        self.conn.get(level).copied()
    }

    pub fn level_members(&self, level: usize) -> &[Vertex] {
        self.gradation.level_slice(level, true)
    }

    /// `uv` in `E_i`: both in `P_i` and within `c(i)` ranks of each other.
    pub fn has_level_edge(&self, level: usize, u: Vertex, v: Vertex) -> bool {
        if u == v || level > self.top_level() {
            return false;
        }
        match (self.gradation.rank(level, u), self.gradation.rank(level, v)) {
            (Some(a), Some(b)) => (a.abs_diff(b) as u64) <= self.conn[level],
            _ => false,
        }
    }

    /// Highest level on which both endpoints live, capped at `M`. Reach grows
    /// with the level and ranks only get closer, so a pair is adjacent at all
    /// iff it is adjacent on this level.
    pub fn top_common_level(&self, u: Vertex, v: Vertex) -> usize {
        self.gradation
            .level_of(u)
            .min(self.gradation.level_of(v))
            .min(self.top_level())
    }

    pub fn level_edges(&self, level: usize) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        let members = if level <= self.top_level() {
            self.level_members(level)
        } else {
            &[]
        };
        let reach = self.conn.get(level).copied().unwrap_or(0);
        let m = members.len();
        (0..m).flat_map(move |r| {
            let hi = (r as u64 + reach).min(m.saturating_sub(1) as u64) as usize;
            (r + 1..=hi).map(move |s| (members[r], members[s]))
        })
    }

    /// Distinct edges of `G`; each pair reported on its top common level.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..=self.top_level()).flat_map(move |i| {
            self.level_edges(i)
                .filter(move |&(u, v)| self.top_common_level(u, v) == i)
        })
    }

    /// Closed-form per-level counts; no enumeration.
    pub fn edge_count(&self) -> EdgeCount {
        let per_level: Vec<u64> = (0..=self.top_level())
            .map(|i| pairs_within_reach(self.level_members(i).len() as u64, self.conn[i]))
            .collect();
        let total = per_level.iter().sum();
        EdgeCount { per_level, total }
    }

    /// `7 n / eps`, from summing `2 * 2^{-i/2}` over all levels.
    pub fn size_bound(&self) -> f64 {
        7.0 * self.gradation.n_padded() as f64 / self.params.eps_step
    }

    /// `[lo, hi] ∩ P_j` is a clique in `G`.
    ///
    /// A pair `u < w` is adjacent iff its rank gap on `L = min(lvl u, lvl w, M)`
    /// is within `c(L)`. The members of the range that live on a level `l`
    /// form a contiguous rank window there, so for each `l` it is enough to
    /// test the vertices whose capped level is exactly `l` against the window
    /// ends.
    pub fn is_clique_range(&self, j: usize, lo: Vertex, hi: Vertex) -> bool {
        if self.is_complete() {
            return true;
        }
        let top = self.top_level();
        let g = &self.gradation;
        if j > top {
            // Every pair meets on level M; only the outermost pair matters.
            let inside = self.level_members(j);
            let a = inside.partition_point(|&v| v < lo);
            let b = inside.partition_point(|&v| v <= hi);
            if b <= a + 1 {
                return true;
            }
            return self.has_level_edge(top, inside[a], inside[b - 1]);
        }
        for l in j..=top {
            let members = self.level_members(l);
            let a = members.partition_point(|&v| v < lo);
            let b = members.partition_point(|&v| v <= hi);
            if b <= a + 1 {
                continue;
            }
            let reach = self.conn[l] as usize;
            for (r, &v) in members[a..b].iter().enumerate() {
                if g.level_of(v).min(top) != l {
                    continue;
                }
                if r.max(b - a - 1 - r) > reach {
                    return false;
                }
            }
        }
        true
    }
}

impl LineGraph for Spanner1D {
    fn n(&self) -> usize {
        self.gradation.n()
    }

    fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        if u == v || u == 0 || v == 0 || u > self.n() || v > self.n() {
            return false;
        }
        self.has_level_edge(self.top_common_level(u, v), u, v)
    }

    fn for_each_forward(&self, x: Vertex, f: &mut dyn FnMut(Vertex)) {
        let cap = self.gradation.level_of(x).min(self.top_level());
        for l in 0..=cap {
            let members = self.level_members(l);
            let Ok(r) = members.binary_search(&x) else {
                continue;
            };
            let hi = (r as u64 + self.conn[l]).min(members.len() as u64 - 1) as usize;
            for &y in &members[r + 1..=hi] {
                f(y);
            }
        }
    }

    fn is_complete(&self) -> bool {
        self.conn[0] + 1 >= self.n() as u64
    }
}

/// Union of independently built copies on the same vertex set.
#[derive(Debug, Clone)]
pub struct BoostedSpanner1D {
    copies: Vec<Spanner1D>,
}

pub fn boost_union(copies: Vec<Spanner1D>) -> Result<BoostedSpanner1D> {
    let Some(first) = copies.first() else {
        return Err(Error::invalid("boost_union needs at least one copy"));
    };
    let n = first.n();
    if let Some(bad) = copies.iter().find(|c| c.n() != n) {
        return Err(Error::invalid(format!(
            "copies disagree on n: {n} vs {}",
            bad.n()
        )));
    }
    Ok(BoostedSpanner1D { copies })
}

impl BoostedSpanner1D {
    /// Markov boosting: `ceil(log2 1/delta)` copies built with `rho / 2`.
    pub fn markov(n: usize, rho: f64, delta: f64, c_const: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta = {delta} not in (0, 1)")));
        }
        let k = (1.0 / delta).log2().ceil().max(1.0) as u64;
        let copies = (0..k)
            .map(|i| {
                let s = crate::hash::derive_seed(crate::hash::Namespace::Copy, seed, &[i]);
                Spanner1D::construct(n, rho / 2.0, None, c_const, s)
            })
            .collect::<Result<Vec<_>>>()?;
        boost_union(copies)
    }

    pub fn copy_count(&self) -> usize {
        self.copies.len()
    }

    pub fn copies(&self) -> &[Spanner1D] {
        &self.copies
    }

    pub fn edges(&self) -> std::collections::BTreeSet<(Vertex, Vertex)> {
        self.copies.iter().flat_map(|c| c.edges()).collect()
    }
}

impl LineGraph for BoostedSpanner1D {
    fn n(&self) -> usize {
        self.copies[0].n()
    }

    fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.copies.iter().any(|c| c.has_edge(u, v))
    }

    fn for_each_forward(&self, x: Vertex, f: &mut dyn FnMut(Vertex)) {
        for c in &self.copies {
            c.for_each_forward(x, f);
        }
    }

    fn is_complete(&self) -> bool {
        self.copies.iter().any(|c| c.is_complete())
    }
}
