//! Stairways, bad points, and monotone paths in the residual 1-D graph.
//!
//! A right stairway of `p` is `p = p_0 <= p_1 <= ... <= p_j` with `p_i ∈ P_i`
//! where every step between distinct points is a level-`i` edge. It is safe
//! when it avoids the attack and usable when `[p_j..n] ∩ P_j` is a clique.
//! A point is bad when it is attacked or lacks a safe usable stairway on
//! either side.

use std::collections::VecDeque;

use crate::attacks::AttackMask;
use crate::error::{Error, Result};
use crate::gradation::Vertex;
use crate::spanner1d::{LineGraph, Spanner1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stairway {
    pub origin: Vertex,
    pub direction: Direction,
    /// `points[i] ∈ P_i`.
    pub points: Vec<Vertex>,
    pub safe: bool,
    pub usable: bool,
}

impl Stairway {
    pub fn top(&self) -> usize {
        self.points.len() - 1
    }

    pub fn last(&self) -> Vertex {
        *self.points.last().unwrap()
    }
}

/// How hard to look for a stairway.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StairwayMode {
    /// Only the interval witness from the reliability argument.
    ProofWitness,
    /// The witness first, then an exact search over all level-respecting
    /// monotone sequences.
    Exhaustive,
}

/// Checks every structural requirement and fills in `safe` / `usable`.
/// Returns `None` if the sequence is not a stairway at all.
pub fn check_stairway(
    s: &Spanner1D,
    attack: &AttackMask,
    origin: Vertex,
    direction: Direction,
    points: Vec<Vertex>,
) -> Option<Stairway> {
    let g = s.gradation();
    if points.first() != Some(&origin) {
        return None;
    }
    for (i, w) in points.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let ordered = match direction {
            Direction::Right => a <= b,
            Direction::Left => a >= b,
        };
        if !ordered || !g.contains(i + 1, b) {
            return None;
        }
        if a != b && !s.has_level_edge(i, a, b) {
            return None;
        }
    }
    let j = points.len() - 1;
    let last = points[j];
    let usable = match direction {
        Direction::Right => s.is_clique_range(j, last, g.n()),
        Direction::Left => s.is_clique_range(j, 1, last),
    };
    let safe = points.iter().all(|&p| !attack.contains(p));
    Some(Stairway {
        origin,
        direction,
        points,
        safe,
        usable,
    })
}

/// The interval witness: on level `i` take the extreme surviving member of
/// `P_i` inside `I_i = [v .. ceil(v/2^i) 2^i + (Δ_i - 1) 2^i]` (mirrored for
/// left stairways), with `Δ_i = floor(2^{(i-1)/2} / (2 eps))`, for every
/// level whose interval still fits in `[1, n]`.
pub fn proof_witness(s: &Spanner1D, attack: &AttackMask, v: Vertex, dir: Direction) -> Option<Stairway> {
    let g = s.gradation();
    let n = g.n();
    let eps = s.params().eps_step;
    let mut points = vec![v];
    for i in 1..=g.height() {
        let block = 1usize << i;
        let delta = (2f64.powf((i as f64 - 1.0) / 2.0) / (2.0 * eps)).floor();
        if delta < 1.0 || delta * block as f64 > 4.0 * n as f64 {
            break;
        }
        let delta = delta as usize;
        let (lo, hi) = match dir {
            Direction::Right => {
                let hi = v.div_ceil(block) * block + (delta - 1) * block;
                if hi > n {
                    break;
                }
                (v, hi)
            }
            Direction::Left => {
                let base = (v - 1) / block * block + 1;
                let Some(lo) = base.checked_sub((delta - 1) * block) else {
                    break;
                };
                if lo < 1 {
                    break;
                }
                (lo, v)
            }
        };
        let members = s.level_members(i);
        let a = members.partition_point(|&x| x < lo);
        let b = members.partition_point(|&x| x <= hi);
        let mut survivors = members[a..b].iter().copied().filter(|&x| !attack.contains(x));
        let pick = match dir {
            Direction::Right => survivors.next(),
            Direction::Left => survivors.next_back(),
        };
        points.push(pick?);
    }
    check_stairway(s, attack, v, dir, points).filter(|st| st.safe && st.usable)
}

/// Exact search. Level by level it tracks every member of `P_i` reachable by
/// a safe level-respecting sequence from `v`, and stops at the first level
/// whose extreme reachable point sees a clique on its side.
pub fn exhaustive_stairway(s: &Spanner1D, attack: &AttackMask, v: Vertex, dir: Direction) -> Option<Stairway> {
    let g = s.gradation();
    let n = g.n();
    if attack.contains(v) {
        return None;
    }
    let top = s.top_level();
    // parents[i][r]: rank in P_{i-1} of the predecessor of rank r in P_i.
    let mut parents: Vec<Vec<Option<usize>>> = Vec::new();
    let members0 = s.level_members(0);
    let mut reached: Vec<bool> = vec![false; members0.len()];
    reached[v - 1] = true;
    parents.push(vec![None; members0.len()]);

    for level in 0..=g.height() {
        let members = s.level_members(level);
        let extreme = match dir {
            Direction::Right => reached.iter().rposition(|&b| b),
            Direction::Left => reached.iter().position(|&b| b),
        };
        let er = extreme?;
        let p = members[er];
        let usable = match dir {
            Direction::Right => s.is_clique_range(level, p, n),
            Direction::Left => s.is_clique_range(level, 1, p),
        };
        if usable {
            let mut points = vec![p];
            let mut r = er;
            for l in (1..=level).rev() {
                r = parents[l][r].expect("reached rank without parent");
                points.push(s.level_members(l - 1)[r]);
            }
            points.reverse();
            return check_stairway(s, attack, v, dir, points);
        }
        if level == g.height() {
            break;
        }
        // Advance to level + 1.
        let next = s.level_members(level + 1);
        let reach = if level <= top { s.conn(level).unwrap() as usize } else { 0 };
        let mut next_reached = vec![false; next.len()];
        let mut next_parent = vec![None; next.len()];
        // Rank of each next-level member inside the current level.
        let mut cur_rank = Vec::with_capacity(next.len());
        let mut it = 0;
        for &q in next {
            while members[it] != q {
                it += 1;
            }
            cur_rank.push(it);
        }
        match dir {
            Direction::Right => {
                let mut last: Option<usize> = None;
                let mut k = 0;
                for (r, &hit) in reached.iter().enumerate() {
                    if hit {
                        last = Some(r);
                    }
                    if k < next.len() && cur_rank[k] == r {
                        if let Some(lr) = last {
                            if r - lr <= reach && !attack.contains(next[k]) {
                                next_reached[k] = true;
                                next_parent[k] = Some(lr);
                            }
                        }
                        k += 1;
                    }
                }
            }
            Direction::Left => {
                let mut last: Option<usize> = None;
                let mut k = next.len();
                for r in (0..reached.len()).rev() {
                    if reached[r] {
                        last = Some(r);
                    }
                    if k > 0 && cur_rank[k - 1] == r {
                        if let Some(lr) = last {
                            if lr - r <= reach && !attack.contains(next[k - 1]) {
                                next_reached[k - 1] = true;
                                next_parent[k - 1] = Some(lr);
                            }
                        }
                        k -= 1;
                    }
                }
            }
        }
        reached = next_reached;
        parents.push(next_parent);
    }
    None
}

/// A safe usable stairway of `v` in `dir`, if one exists.
pub fn find_stairway(
    s: &Spanner1D,
    attack: &AttackMask,
    v: Vertex,
    dir: Direction,
    mode: StairwayMode,
) -> Result<Option<Stairway>> {
    check_vertex(s, v)?;
    if attack.contains(v) {
        return Err(Error::invalid(format!("vertex {v} is attacked")));
    }
    if let Some(st) = proof_witness(s, attack, v, dir) {
        return Ok(Some(st));
    }
    Ok(match mode {
        StairwayMode::ProofWitness => None,
        StairwayMode::Exhaustive => exhaustive_stairway(s, attack, v, dir),
    })
}

fn check_vertex(s: &Spanner1D, v: Vertex) -> Result<()> {
    if v == 0 || v > s.gradation().n() {
        return Err(Error::invalid(format!("vertex {v} outside [1, {}]", s.gradation().n())));
    }
    Ok(())
}

pub fn is_bad(s: &Spanner1D, attack: &AttackMask, v: Vertex, mode: StairwayMode) -> bool {
    if attack.contains(v) {
        return true;
    }
    if s.is_complete() {
        return false;
    }
    [Direction::Right, Direction::Left]
        .into_iter()
        .any(|d| matches!(find_stairway(s, attack, v, d, mode), Ok(None)))
}

/// Bad points under both search modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Badness {
    /// `bad[v - 1]` under the exact definition.
    pub bad: Vec<bool>,
    /// `bad[v - 1]` when only the interval witness is accepted.
    pub witness_bad: Vec<bool>,
}

impl Badness {
    pub fn count(&self) -> usize {
        self.bad.iter().filter(|&&b| b).count()
    }

    pub fn witness_count(&self) -> usize {
        self.witness_bad.iter().filter(|&&b| b).count()
    }

    pub fn in_stairway_set(&self, v: Vertex) -> bool {
        !self.bad[v - 1]
    }
}

pub fn classify_bad(s: &Spanner1D, attack: &AttackMask) -> Badness {
    let n = s.gradation().n();
    let mut bad = vec![false; n];
    let mut witness_bad = vec![false; n];
    for v in 1..=n {
        if attack.contains(v) {
            bad[v - 1] = true;
            witness_bad[v - 1] = true;
            continue;
        }
        if s.is_complete() {
            continue;
        }
        let w = [Direction::Right, Direction::Left]
            .map(|d| proof_witness(s, attack, v, d).is_some());
        witness_bad[v - 1] = !(w[0] && w[1]);
        bad[v - 1] = !w
            .iter()
            .zip([Direction::Right, Direction::Left])
            .all(|(&ok, d)| ok || exhaustive_stairway(s, attack, v, d).is_some());
    }
    Badness { bad, witness_bad }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathRoute {
    /// Built from crossing stairways.
    Stairways,
    /// Found by forward search in the residual graph.
    Reachability,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonePath {
    pub vertices: Vec<Vertex>,
    pub route: PathRoute,
}

impl MonotonePath {
    /// Metric length on the line.
    pub fn length(&self) -> usize {
        self.vertices.first().unwrap().abs_diff(*self.vertices.last().unwrap())
    }
}

/// Joins a right stairway of `u` with a left stairway of `v` (`u < v`).
fn crossing_path(a: &Stairway, b: &Stairway) -> Vec<Vertex> {
    let j = a.top().min(b.top());
    let (ap, bp) = (&a.points[..=j], &b.points[..=j]);
    let mut path: Vec<Vertex> = match (1..=j).find(|&i| ap[i] >= bp[i]) {
        Some(i) if ap[i] < bp[i - 1] => ap[..=i].iter().chain(bp[..i].iter().rev()).copied().collect(),
        Some(i) => ap[..i].iter().chain(bp[..i].iter().rev()).copied().collect(),
        None => ap.iter().chain(bp.iter().rev()).copied().collect(),
    };
    path.dedup();
    path
}

/// Strictly increasing, edge-supported, and avoids the attack.
pub fn is_valid_monotone_path<G: LineGraph + ?Sized>(g: &G, attack: &AttackMask, path: &[Vertex]) -> bool {
    !path.is_empty()
        && path.iter().all(|&x| !attack.contains(x))
        && path.windows(2).all(|w| w[0] < w[1] && g.has_edge(w[0], w[1]))
}

/// Forward breadth-first search restricted to survivors in `[u, v]`.
pub fn reachability_path<G: LineGraph + ?Sized>(
    g: &G,
    attack: &AttackMask,
    u: Vertex,
    v: Vertex,
) -> Option<Vec<Vertex>> {
    let mut parent = vec![0usize; v - u + 1];
    let mut seen = vec![false; v - u + 1];
    seen[0] = true;
    let mut queue = VecDeque::from([u]);
    while let Some(x) = queue.pop_front() {
        if x == v {
            let mut path = vec![v];
            let mut cur = v;
            while cur != u {
                cur = parent[cur - u];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        g.for_each_forward(x, &mut |y| {
            if y <= v && !seen[y - u] && !attack.contains(y) {
                seen[y - u] = true;
                parent[y - u] = x;
                queue.push_back(y);
            }
        });
    }
    None
}

/// A monotone `u`–`v` path in `G \ B`, or `None` when there is none.
pub fn monotone_path(s: &Spanner1D, attack: &AttackMask, u: Vertex, v: Vertex) -> Result<Option<MonotonePath>> {
    check_vertex(s, u)?;
    check_vertex(s, v)?;
    if u == v {
        return Err(Error::invalid("path endpoints coincide"));
    }
    if attack.contains(u) || attack.contains(v) {
        return Err(Error::invalid("path endpoint is attacked"));
    }
    let (lo, hi) = (u.min(v), u.max(v));
    let orient = |mut p: Vec<Vertex>| {
        if u > v {
            p.reverse();
        }
        p
    };
    let right = exhaustive_or_witness(s, attack, lo, Direction::Right);
    let left = exhaustive_or_witness(s, attack, hi, Direction::Left);
    if let (Some(a), Some(b)) = (right, left) {
        let path = crossing_path(&a, &b);
        if is_valid_monotone_path(s, attack, &path) && path.first() == Some(&lo) && path.last() == Some(&hi) {
            return Ok(Some(MonotonePath {
                vertices: orient(path),
                route: PathRoute::Stairways,
            }));
        }
        log::warn!("stairway join for ({lo}, {hi}) did not produce a valid path");
    }
    Ok(reachability_path(s, attack, lo, hi).map(|p| MonotonePath {
        vertices: orient(p),
        route: PathRoute::Reachability,
    }))
}

fn exhaustive_or_witness(s: &Spanner1D, attack: &AttackMask, v: Vertex, dir: Direction) -> Option<Stairway> {
    proof_witness(s, attack, v, dir).or_else(|| exhaustive_stairway(s, attack, v, dir))
}

/// Forward-reachability closure over survivors as bitsets.
pub struct Reachability {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Reachability {
    pub fn compute<G: LineGraph + ?Sized>(g: &G, attack: &AttackMask) -> Self {
        let n = g.n();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        let mut nbrs = Vec::new();
        for x in (1..=n).rev() {
            if attack.contains(x) {
                continue;
            }
            nbrs.clear();
            g.for_each_forward(x, &mut |y| {
                if !attack.contains(y) {
                    nbrs.push(y);
                }
            });
            nbrs.sort_unstable();
            nbrs.dedup();
            let (head, tail) = bits.split_at_mut(x * words);
            let row = &mut head[(x - 1) * words..];
            row[(x - 1) / 64] |= 1 << ((x - 1) % 64);
            for &y in &nbrs {
                let other = &tail[(y - 1 - x) * words..(y - x) * words];
                for (a, b) in row.iter_mut().zip(other) {
                    *a |= *b;
                }
            }
        }
        Reachability { n, words, bits }
    }

    pub fn reaches(&self, u: Vertex, v: Vertex) -> bool {
        debug_assert!(u <= self.n && v <= self.n);
        self.bits[(u - 1) * self.words + (v - 1) / 64] >> ((v - 1) % 64) & 1 == 1
    }
}

/// Unordered survivor pairs `{u < v}` without a monotone path in `G \ B`.
pub fn damaged_pairs_1d<G: LineGraph + ?Sized>(g: &G, attack: &AttackMask) -> Vec<(Vertex, Vertex)> {
    let n = g.n();
    if g.is_complete() {
        return Vec::new();
    }
    let reach = Reachability::compute(g, attack);
    let mut out = Vec::new();
    for u in 1..=n {
        if attack.contains(u) {
            continue;
        }
        for v in u + 1..=n {
            if !attack.contains(v) && !reach.reaches(u, v) {
                out.push((u, v));
            }
        }
    }
    out
}
