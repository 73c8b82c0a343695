//! Damaged-set extension and loss rate.
//!
//! Survivors that must be dropped so that every remaining pair keeps its
//! path form a vertex cover of the bad-pair graph, so the smallest extension
//! is a minimum vertex cover. Small kernels are solved exactly; larger ones
//! get a greedy cover and a maximum-matching lower bound.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::maximum_matching;
use petgraph::graph::UnGraph;
use serde::{Deserialize, Serialize};

use crate::attacks::AttackMask;
use crate::error::{Error, Result};
use crate::gradation::Vertex;
use crate::resilience1d::{classify_bad, damaged_pairs_1d};
use crate::spanner1d::Spanner1D;

/// Components up to this size are solved by branch and bound.
pub const EXACT_LIMIT: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
    /// A cover of size `upper`.
    pub witness: BTreeSet<Vertex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Expectation,
    Probabilistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub attack_size: usize,
    pub bad_pairs: usize,
    pub extension_lower: usize,
    pub extension_upper: usize,
    pub exact: bool,
    pub loss_rate_bounds: (f64, f64),
    pub variant: Variant,
    /// Points without safe usable stairways on both sides, attacked ones
    /// included. Only reported for the 1-D construction.
    pub stairway_bad: Option<usize>,
    pub witness: BTreeSet<Vertex>,
}

impl LossReport {
    pub fn loss_lower(&self) -> f64 {
        self.loss_rate_bounds.0
    }

    pub fn loss_upper(&self) -> f64 {
        self.loss_rate_bounds.1
    }
}

/// Compact adjacency over the distinct endpoints of `pairs`.
struct PairGraph {
    labels: Vec<Vertex>,
    adj: Vec<BTreeSet<usize>>,
}

impl PairGraph {
    fn new(pairs: &[(Vertex, Vertex)]) -> Self {
        let mut index = BTreeMap::new();
        for &(u, v) in pairs {
            let k = index.len();
            index.entry(u).or_insert(k);
            let k = index.len();
            index.entry(v).or_insert(k);
        }
        let mut labels = vec![0; index.len()];
        for (&v, &i) in &index {
            labels[i] = v;
        }
        let mut adj = vec![BTreeSet::new(); labels.len()];
        for &(u, v) in pairs {
            if u != v {
                let (a, b) = (index[&u], index[&v]);
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        PairGraph { labels, adj }
    }
}

/// Minimum vertex cover of the graph whose edges are `pairs`.
pub fn min_extension(pairs: &[(Vertex, Vertex)]) -> Extension {
    let PairGraph { labels, mut adj } = PairGraph::new(pairs);
    let mut cover: Vec<usize> = Vec::new();
    kernelize(&mut adj, &mut cover);

    let forced = cover.len();
    let (mut lower, mut upper) = (forced, forced);
    let mut exact = true;
    for comp in components(&adj) {
        if comp.len() <= EXACT_LIMIT {
            let chosen = exact_cover(&adj, &comp);
            lower += chosen.len();
            upper += chosen.len();
            cover.extend(chosen);
        } else {
            let greedy = greedy_cover(&adj, &comp);
            let matching = matching_size(&adj, &comp);
            lower += matching;
            upper += greedy.len();
            if matching < greedy.len() {
                exact = false;
            }
            cover.extend(greedy);
        }
    }
    Extension {
        lower,
        upper,
        exact,
        witness: cover.into_iter().map(|i| labels[i]).collect(),
    }
}

/// Maximum-matching lower bound and greedy upper bound on the whole graph,
/// with no kernelization or exact search.
pub fn heuristic_bounds(pairs: &[(Vertex, Vertex)]) -> (usize, usize) {
    let PairGraph { adj, .. } = PairGraph::new(pairs);
    components(&adj)
        .iter()
        .map(|c| (matching_size(&adj, c), greedy_cover(&adj, c).len()))
        .fold((0, 0), |(l, u), (a, b)| (l + a, u + b))
}

/// Degree-0 vertices drop out; a degree-1 vertex's neighbor joins the cover.
fn kernelize(adj: &mut [BTreeSet<usize>], cover: &mut Vec<usize>) {
    let mut queue: Vec<usize> = (0..adj.len()).filter(|&v| adj[v].len() == 1).collect();
    while let Some(v) = queue.pop() {
        if adj[v].len() != 1 {
            continue;
        }
        let u = *adj[v].iter().next().unwrap();
        cover.push(u);
        let nbrs = std::mem::take(&mut adj[u]);
        for w in nbrs {
            adj[w].remove(&u);
            if adj[w].len() == 1 {
                queue.push(w);
            }
        }
    }
}

fn components(adj: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for s in 0..adj.len() {
        if seen[s] || adj[s].is_empty() {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut k = 0;
        while k < comp.len() {
            for &w in &adj[comp[k]] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Branch and bound on bitmasks; `comp.len() <= 64`.
fn exact_cover(adj: &[BTreeSet<usize>], comp: &[usize]) -> Vec<usize> {
    let local: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let masks: Vec<u64> = comp
        .iter()
        .map(|v| adj[*v].iter().fold(0u64, |m, w| m | 1 << local[w]))
        .collect();
    let alive = if comp.len() == 64 { u64::MAX } else { (1u64 << comp.len()) - 1 };
    let mut best = (alive, comp.len() as u32);
    branch(&masks, alive, 0, &mut best);
    (0..comp.len()).filter(|&i| best.0 >> i & 1 == 1).map(|i| comp[i]).collect()
}

fn branch(masks: &[u64], mut alive: u64, mut taken: u64, best: &mut (u64, u32)) {
    // Reductions on the induced subgraph.
    loop {
        let mut changed = false;
        let mut rest = alive;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let nb = masks[v] & alive;
            match nb.count_ones() {
                0 => {
                    alive &= !(1 << v);
                    changed = true;
                }
                1 => {
                    let u = nb.trailing_zeros();
                    taken |= 1 << u;
                    alive &= !(1 << u) & !(1 << v);
                    changed = true;
                }
                _ => {}
            }
            if changed {
                break;
            }
        }
        if !changed {
            break;
        }
    }
    let count = taken.count_ones();
    if alive == 0 {
        if count < best.1 {
            *best = (taken, count);
        }
        return;
    }
    if count + greedy_matching_bits(masks, alive) >= best.1 {
        return;
    }
    let mut rest = alive;
    let (mut pick, mut deg) = (0, 0);
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let d = (masks[v] & alive).count_ones();
        if d > deg {
            pick = v;
            deg = d;
        }
    }
    let nb = masks[pick] & alive;
    branch(masks, alive & !(1 << pick), taken | 1 << pick, best);
    branch(masks, alive & !nb & !(1 << pick), taken | nb, best);
}

fn greedy_matching_bits(masks: &[u64], mut alive: u64) -> u32 {
    let mut size = 0;
    while alive != 0 {
        let v = alive.trailing_zeros() as usize;
        alive &= !(1 << v);
        let nb = masks[v] & alive;
        if nb != 0 {
            alive &= !(1 << nb.trailing_zeros());
            size += 1;
        }
    }
    size
}

/// The smaller of two covers: endpoints of a maximal matching, and
/// repeatedly taking a vertex of highest remaining degree.
fn greedy_cover(adj: &[BTreeSet<usize>], comp: &[usize]) -> Vec<usize> {
    let mut matched = BTreeSet::new();
    for &v in comp {
        if matched.contains(&v) {
            continue;
        }
        if let Some(&w) = adj[v].iter().find(|w| !matched.contains(*w)) {
            matched.insert(v);
            matched.insert(w);
        }
    }

    let mut deg: BTreeMap<usize, usize> = comp.iter().map(|&v| (v, adj[v].len())).collect();
    let mut by_deg: BTreeSet<(usize, std::cmp::Reverse<usize>)> =
        deg.iter().map(|(&v, &d)| (d, std::cmp::Reverse(v))).collect();
    let mut removed = BTreeSet::new();
    let mut chosen = Vec::new();
    while let Some(&(d, std::cmp::Reverse(v))) = by_deg.iter().next_back() {
        if d == 0 {
            break;
        }
        by_deg.remove(&(d, std::cmp::Reverse(v)));
        removed.insert(v);
        chosen.push(v);
        for &w in &adj[v] {
            if removed.contains(&w) {
                continue;
            }
            let dw = deg.get_mut(&w).unwrap();
            by_deg.remove(&(*dw, std::cmp::Reverse(w)));
            *dw -= 1;
            by_deg.insert((*dw, std::cmp::Reverse(w)));
        }
    }
    if matched.len() < chosen.len() {
        matched.into_iter().collect()
    } else {
        chosen
    }
}

fn matching_size(adj: &[BTreeSet<usize>], comp: &[usize]) -> usize {
    let local: BTreeMap<usize, u32> = comp.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let edges = comp.iter().flat_map(|&v| {
        let local = &local;
        adj[v].iter().filter(move |&&w| w > v).map(move |w| (local[&v], local[w]))
    });
    let g: UnGraph<(), ()> = UnGraph::from_edges(edges);
    maximum_matching(&g).len()
}

/// `[lower / |B|, upper / |B|]`.
pub fn loss_rate(attack_size: usize, ext: &Extension) -> Result<(f64, f64)> {
    if attack_size == 0 {
        return Err(Error::UndefinedLoss);
    }
    let b = attack_size as f64;
    Ok((ext.lower as f64 / b, ext.upper as f64 / b))
}

pub fn loss_report(attack: &AttackMask, pairs: &[(Vertex, Vertex)], variant: Variant) -> Result<LossReport> {
    let attack_size = attack.count();
    if attack_size == 0 {
        return Err(Error::UndefinedLoss);
    }
    if let Some(&(u, v)) = pairs.iter().find(|&&(u, v)| attack.contains(u) || attack.contains(v)) {
        return Err(Error::invalid(format!("pair ({u}, {v}) touches the attack")));
    }
    let ext = min_extension(pairs);
    let bounds = loss_rate(attack_size, &ext)?;
    Ok(LossReport {
        attack_size,
        bad_pairs: pairs.len(),
        extension_lower: ext.lower,
        extension_upper: ext.upper,
        exact: ext.exact,
        loss_rate_bounds: bounds,
        variant,
        stairway_bad: None,
        witness: ext.witness,
    })
}

/// Loss of a 1-D spanner under `attack`, with the stairway count alongside.
pub fn loss_1d(s: &Spanner1D, attack: &AttackMask) -> Result<LossReport> {
    let variant = if s.params().is_probabilistic() {
        Variant::Probabilistic
    } else {
        Variant::Expectation
    };
    let pairs = damaged_pairs_1d(s, attack);
    let mut report = loss_report(attack, &pairs, variant)?;
    report.stairway_bad = Some(classify_bad(s, attack).count());
    Ok(report)
}
