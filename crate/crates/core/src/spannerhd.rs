//! The `d`-dimensional construction: for every ordering `sigma` of a
//! locality-sensitive family, `N` independent 1-D spanners over the
//! `sigma`-sorted points; the graph is the union of all of them.
//!
//! Copies whose parameters collapse to a single clique are never
//! materialized: each is the complete graph in any order, so the union is
//! complete and every bad set is the attack itself.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::attacks::AttackMask;
use crate::error::{Error, Result};
use crate::gradation::{Gradation, Vertex};
use crate::hash::{derive_seed, Namespace};
use crate::lso::{FamilyKind, FixedPoint, LsoWitness, OrderingFamily};
use crate::resilience1d::{classify_bad, monotone_path};
use crate::spanner1d::{LineGraph, Params1D, Spanner1D};

/// Relative slack on stretch comparisons.
pub const STRETCH_TOL: f64 = 1e-9;

/// Orderings with materialized copies are capped at this many.
pub const MATERIALIZE_LIMIT: u64 = 1 << 16;

/// Families up to this size are searched exhaustively when the analytic
/// candidates give no witness.
const EXHAUSTIVE_LIMIT: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsHD {
    pub eps: f64,
    pub rho: f64,
    pub delta: Option<f64>,
    pub c_const: f64,
    pub varsigma: f64,
    /// Copies per ordering, `N = max(1, ceil(log2 log2 n))`.
    pub rounds: usize,
    /// Orderings in the family.
    pub orderings: u64,
    pub rho_prime: f64,
    pub delta_prime: Option<f64>,
    /// Parameters shared by every copy.
    pub copy: Params1D,
}

impl ParamsHD {
    pub fn derive(
        n: usize,
        eps: f64,
        rho: f64,
        delta: Option<f64>,
        c_const: f64,
        orderings: u64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("need at least two points"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid(format!("eps = {eps} not in (0, 1)")));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid(format!("rho = {rho} not in (0, 1)")));
        }
        let rounds = rounds_for(n);
        let mn = orderings as f64 * rounds as f64;
        let rho_prime = rho / (3.0 * mn);
        let delta_prime = delta.map(|d| d / mn);
        let copy = Params1D::derive(n, rho_prime, delta_prime, c_const)?;
        Ok(ParamsHD {
            eps,
            rho,
            delta,
            c_const,
            varsigma: eps / 32.0,
            rounds,
            orderings,
            rho_prime,
            delta_prime,
            copy,
        })
    }
}

pub fn rounds_for(n: usize) -> usize {
    ((n as f64).log2().log2().ceil().max(1.0)) as usize
}

/// `unit = (x - offset) * scale`, one scale for all axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: Vec<f64>,
    pub scale: f64,
}

impl Normalization {
    pub fn fit(points: &[Vec<f64>]) -> Result<Self> {
        let d = points.first().map_or(0, |p| p.len());
        if d == 0 {
            return Err(Error::invalid("points need at least one coordinate"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::invalid(format!("mixed dimensions: {d} and {}", p.len())));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("coordinates must be finite"));
        }
        let lo: Vec<f64> = (0..d).map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
        let extent = (0..d)
            .map(|k| points.iter().map(|p| p[k] - lo[k]).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let scale = if extent > 0.0 { (1.0 - 1e-6) / extent } else { 1.0 };
        Ok(Normalization { offset: lo, scale })
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.offset).map(|(x, o)| (x - o) * self.scale).collect()
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The copies of one ordering.
#[derive(Debug, Clone)]
pub struct SortedCopies {
    /// `order[r - 1]` is the point of rank `r`.
    pub order: Vec<Vertex>,
    pub rank_of: Vec<usize>,
    /// `copies[i - 1]` is copy `i`.
    pub copies: Vec<Spanner1D>,
}

impl SortedCopies {
    fn to_ranks(&self, mask: &AttackMask) -> AttackMask {
        AttackMask::from_vertices(mask.n(), mask.vertices().into_iter().map(|v| self.rank_of[v - 1]))
    }
}

#[derive(Debug, Clone)]
pub struct SpannerHD {
    points: Vec<Vec<f64>>,
    fixed: Vec<FixedPoint>,
    normalization: Normalization,
    family: OrderingFamily,
    params: ParamsHD,
    seed: u64,
    /// Empty when the copies are cliques.
    sorted: Vec<SortedCopies>,
}

/// Serialized form; copies are rebuilt from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdBundle {
    pub points: Vec<Vec<f64>>,
    pub normalization: Normalization,
    pub family: OrderingFamily,
    pub params: ParamsHD,
    pub seed: u64,
}

pub fn build_hd(
    points: Vec<Vec<f64>>,
    eps: f64,
    rho: f64,
    delta: Option<f64>,
    c_const: f64,
    seed: u64,
) -> Result<SpannerHD> {
    let d = points.first().map_or(0, |p| p.len());
    let family = OrderingFamily::build(eps / 32.0, d)?;
    build_hd_with_family(points, family, eps, rho, delta, c_const, seed)
}

pub fn build_hd_with_family(
    points: Vec<Vec<f64>>,
    family: OrderingFamily,
    eps: f64,
    rho: f64,
    delta: Option<f64>,
    c_const: f64,
    seed: u64,
) -> Result<SpannerHD> {
    let n = points.len();
    let params = ParamsHD::derive(n, eps, rho, delta, c_const, family.count())?;
    let normalization = Normalization::fit(&points)?;
    if family.d != points[0].len() {
        return Err(Error::invalid(format!(
            "family is for dimension {}, points have {}",
            family.d,
            points[0].len()
        )));
    }
    let fixed = points
        .iter()
        .map(|p| FixedPoint::from_unit(&normalization.apply(p)))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeSet::new();
    for (i, f) in fixed.iter().enumerate() {
        if !seen.insert(f) {
            return Err(Error::invalid(format!("duplicate point {:?} at index {}", points[i], i + 1)));
        }
    }
    let mut s = SpannerHD {
        points,
        fixed,
        normalization,
        family,
        params,
        seed,
        sorted: Vec::new(),
    };
    if !s.params.copy.degenerate {
        if s.family.count() > MATERIALIZE_LIMIT {
            return Err(Error::invalid(format!(
                "{} orderings with non-clique copies are too many to materialize",
                s.family.count()
            )));
        }
        s.sorted = (0..s.family.count()).map(|k| s.sort_copies(k)).collect::<Result<_>>()?;
    }
    Ok(s)
}

impl SpannerHD {
    pub fn from_bundle(b: HdBundle) -> Result<Self> {
        let s = build_hd_with_family(
            b.points,
            b.family,
            b.params.eps,
            b.params.rho,
            b.params.delta,
            b.params.c_const,
            b.seed,
        )?;
        if s.normalization != b.normalization {
            return Err(Error::invalid("normalization does not match the points"));
        }
        Ok(s)
    }

    pub fn bundle(&self) -> HdBundle {
        HdBundle {
            points: self.points.clone(),
            normalization: self.normalization.clone(),
            family: self.family.clone(),
            params: self.params.clone(),
            seed: self.seed,
        }
    }

    fn sort_copies(&self, k: u64) -> Result<SortedCopies> {
        let o = self.family.get(k);
        let mut order: Vec<Vertex> = (1..=self.n()).collect();
        order.sort_by(|&a, &b| self.family.compare_unchecked(&o, &self.fixed[a - 1], &self.fixed[b - 1]));
        let mut rank_of = vec![0; self.n()];
        for (r, &v) in order.iter().enumerate() {
            rank_of[v - 1] = r + 1;
        }
        let copies = (1..=self.params.rounds)
            .map(|i| {
                let seed = derive_seed(Namespace::Copy, self.seed, &[k, i as u64]);
                Spanner1D::build(Gradation::build(self.n(), seed)?, self.params.copy.clone())
            })
            .collect::<Result<_>>()?;
        Ok(SortedCopies { order, rank_of, copies })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn params(&self) -> &ParamsHD {
        &self.params
    }

    pub fn family(&self) -> &OrderingFamily {
        &self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn point(&self, v: Vertex) -> &[f64] {
        &self.points[v - 1]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn dist(&self, u: Vertex, v: Vertex) -> f64 {
        euclid(self.point(u), self.point(v))
    }

    /// All copies are single cliques, so the union is complete.
    pub fn is_complete(&self) -> bool {
        self.params.copy.degenerate
    }

    pub fn sorted_copies(&self) -> &[SortedCopies] {
        &self.sorted
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        if u == v {
            return false;
        }
        self.is_complete()
            || self.sorted.iter().any(|s| {
                let (a, b) = (s.rank_of[u - 1], s.rank_of[v - 1]);
                s.copies.iter().any(|c| c.has_edge(a, b))
            })
    }

    /// Neighbor lists of the union graph.
    pub fn adjacency(&self) -> Vec<Vec<Vertex>> {
        let n = self.n();
        if self.is_complete() {
            return (1..=n).map(|v| (1..=n).filter(|&w| w != v).collect()).collect();
        }
        let mut sets = vec![BTreeSet::new(); n];
        for s in &self.sorted {
            for c in &s.copies {
                for (a, b) in c.edges() {
                    let (u, v) = (s.order[a - 1], s.order[b - 1]);
                    sets[u - 1].insert(v);
                    sets[v - 1].insert(u);
                }
            }
        }
        sets.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    pub fn edge_count(&self) -> u64 {
        if self.is_complete() {
            let n = self.n() as u64;
            return n * (n - 1) / 2;
        }
        self.adjacency().iter().map(|a| a.len() as u64).sum::<u64>() / 2
    }

    /// `N * M` times the per-copy size bound.
    pub fn size_bound(&self) -> f64 {
        let per_copy = 7.0 * self.n().next_power_of_two() as f64 / self.params.copy.eps_step;
        self.params.rounds as f64 * self.params.orderings as f64 * per_copy
    }

    /// `B_0 = B`, then `B_i` adds every point that is bad in some copy `i`
    /// under the attack `B_{i-1}`.
    pub fn bad_sequence(&self, attack: &AttackMask) -> Vec<AttackMask> {
        let mut seq = vec![attack.clone()];
        for i in 1..=self.params.rounds {
            let prev = seq.last().unwrap().clone();
            let mut next = prev.clone();
            for s in &self.sorted {
                let bad = classify_bad(&s.copies[i - 1], &s.to_ranks(&prev));
                for (r, &b) in bad.bad.iter().enumerate() {
                    if b {
                        next.insert(s.order[r]);
                    }
                }
            }
            seq.push(next);
        }
        seq
    }

    fn witness(&self, x: Vertex, y: Vertex) -> Option<LsoWitness> {
        let exhaustive = self.family.count() <= EXHAUSTIVE_LIMIT;
        self.family.verify_lso_property(&self.fixed, x - 1, y - 1, exhaustive)
    }

    /// A path from `p` to `q` in `G \ B` following the round-by-round
    /// recursion. `bad` is the output of [`SpannerHD::bad_sequence`].
    pub fn path_hd(&self, bad: &[AttackMask], p: Vertex, q: Vertex) -> Result<Option<HdPath>> {
        let n = self.n();
        if p == 0 || q == 0 || p > n || q > n {
            return Err(Error::invalid(format!("points are numbered 1..={n}")));
        }
        if bad.len() != self.params.rounds + 1 {
            return Err(Error::invalid("bad sequence has the wrong length"));
        }
        let attack = &bad[0];
        if attack.contains(p) || attack.contains(q) {
            return Err(Error::invalid("path endpoint is attacked"));
        }
        let mut run = PathRun {
            s: self,
            bad,
            scale: self.dist(p, q),
            defects: Vec::new(),
        };
        let vertices = if p == q { Some(vec![p]) } else { run.connect(p, q, 0) };
        let expected = !bad[self.params.rounds].contains(p) && !bad[self.params.rounds].contains(q);
        let Some(vertices) = vertices else {
            if expected {
                run.defects.push(format!("no path between {p} and {q} outside the bad set"));
                for d in &run.defects {
                    log::warn!("{d}");
                }
            }
            return Ok(None);
        };
        let length: f64 = vertices.windows(2).map(|w| self.dist(w[0], w[1])).sum();
        let direct = self.dist(p, q);
        let stretch = if direct > 0.0 { length / direct } else { 1.0 };
        if expected
            && self.family.kind == FamilyKind::Shifted
            && stretch > (1.0 + self.params.eps) * (1.0 + STRETCH_TOL)
        {
            run.defects.push(format!("stretch {stretch} above 1 + eps between {p} and {q}"));
        }
        for d in &run.defects {
            log::warn!("{d}");
        }
        Ok(Some(HdPath {
            vertices,
            length,
            stretch,
            defects: run.defects,
        }))
    }

    /// Survivor pairs `u < v` whose distance in `G \ B` exceeds
    /// `(1 + eps) |uv|`.
    pub fn damaged_pairs_hd(&self, attack: &AttackMask) -> Vec<(Vertex, Vertex)> {
        if self.is_complete() {
            return Vec::new();
        }
        let adj = self.adjacency();
        let n = self.n();
        let bound = (1.0 + self.params.eps) * (1.0 + STRETCH_TOL);
        let mut out = Vec::new();
        for u in 1..=n {
            if attack.contains(u) {
                continue;
            }
            let dist = residual_distances(self, &adj, attack, u);
            for v in u + 1..=n {
                if !attack.contains(v) && dist[v - 1] > bound * self.dist(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// Single-source shortest paths in `G \ B` (dense Dijkstra).
pub fn residual_distances(s: &SpannerHD, adj: &[Vec<Vertex>], attack: &AttackMask, src: Vertex) -> Vec<f64> {
    let n = s.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[src - 1] = 0.0;
    loop {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if !done[i] && dist[i].is_finite() && best.is_none_or(|b| dist[i] < dist[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        done[i] = true;
        for &w in &adj[i] {
            if attack.contains(w) || done[w - 1] {
                continue;
            }
            let alt = dist[i] + s.dist(i + 1, w);
            if alt < dist[w - 1] {
                dist[w - 1] = alt;
            }
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdPath {
    pub vertices: Vec<Vertex>,
    pub length: f64,
    pub stretch: f64,
    /// Invariant violations seen while building the path.
    pub defects: Vec<String>,
}

struct PathRun<'a> {
    s: &'a SpannerHD,
    bad: &'a [AttackMask],
    scale: f64,
    defects: Vec<String>,
}

impl PathRun<'_> {
    /// Connects `x` to `y` starting at round `round`.
    fn connect(&mut self, x: Vertex, y: Vertex, round: usize) -> Option<Vec<Vertex>> {
        if x == y {
            return Some(vec![x]);
        }
        let s = self.s;
        let rounds = s.params.rounds;
        if s.family.kind == FamilyKind::Shifted {
            let limit = (2.0 * s.params.varsigma).powi(round as i32) * self.scale;
            if s.dist(x, y) > limit * (1.0 + STRETCH_TOL) + 1e-12 {
                self.defects.push(format!("round {round} pair ({x}, {y}) is farther than (2 varsigma)^{round} |pq|"));
            }
        }
        if s.is_complete() {
            return Some(vec![x, y]);
        }
        let w = self.s.witness(x, y)?;
        let sorted = &s.sorted[w.index as usize];
        let copy_index = rounds - round;
        let avoid = &self.bad[copy_index - 1];
        let copy = &sorted.copies[copy_index - 1];
        let ranks = sorted.to_ranks(avoid);
        let path = monotone_path(copy, &ranks, sorted.rank_of[x - 1], sorted.rank_of[y - 1]).ok()??;
        let path: Vec<Vertex> = path.vertices.iter().map(|&r| sorted.order[r - 1]).collect();
        debug_assert!(path.iter().all(|&v| !avoid.contains(v)));

        if round + 1 == rounds {
            let levels = (s.n() as f64).log2().ceil().max(1.0);
            if (path.len() - 1) as f64 > 2.0 * levels {
                self.defects.push(format!("final path between {x} and {y} has {} edges", path.len() - 1));
            }
            return Some(path);
        }
        // Points strictly before the split lie near `x`.
        let near_x: BTreeSet<Vertex> = std::iter::once(x)
            .chain(w.between[..w.split].iter().map(|&z| z + 1))
            .collect();
        let t = path.iter().position(|v| !near_x.contains(v))?;
        let (xp, yp) = (path[t - 1], path[t]);
        if s.family.kind == FamilyKind::Shifted {
            let r = 2.0 * s.params.varsigma * s.dist(x, y) * (1.0 + STRETCH_TOL);
            if s.dist(x, xp) > r || s.dist(y, yp) > r {
                self.defects.push(format!("crossing edge ({xp}, {yp}) strays from ({x}, {y})"));
            }
        }
        let mut left = self.connect(x, xp, round + 1)?;
        let right = self.connect(yp, y, round + 1)?;
        left.extend(right);
        Some(left)
    }
}

/// Compares two points under ordering `index` of the family.
pub fn order_points(s: &SpannerHD, index: u64, u: Vertex, v: Vertex) -> Result<Ordering> {
    let o = s.family.get(index);
    s.family.compare(&o, &s.fixed[u - 1], &s.fixed[v - 1])
}
