//! Attack sets. Oblivious generators see only `n` and a seed; the one
//! structure-aware attack needs the built spanner and is flagged as such.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradation::Vertex;
use crate::hash::{derive_seed, Namespace};
use crate::spanner1d::Spanner1D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Uniform,
    Block,
    Multiblock,
    Periodic,
    Custom,
    RemarkMiddle,
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AttackKind::Uniform => "uniform",
            AttackKind::Block => "block",
            AttackKind::Multiblock => "multiblock",
            AttackKind::Periodic => "periodic",
            AttackKind::Custom => "custom",
            AttackKind::RemarkMiddle => "remark-middle",
        };
        f.write_str(s)
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform" => AttackKind::Uniform,
            "block" => AttackKind::Block,
            "multiblock" => AttackKind::Multiblock,
            "periodic" => AttackKind::Periodic,
            "custom" => AttackKind::Custom,
            "remark-middle" => AttackKind::RemarkMiddle,
            other => return Err(Error::invalid(format!("unknown attack kind '{other}'"))),
        })
    }
}

/// How large an oblivious attack should be.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackSize {
    Count(usize),
    Fraction(f64),
}

impl AttackSize {
    fn count(self, n: usize) -> Result<usize> {
        match self {
            AttackSize::Count(k) if k <= n => Ok(k),
            AttackSize::Count(k) => Err(Error::invalid(format!("attack size {k} exceeds n = {n}"))),
            AttackSize::Fraction(f) if (0.0..=1.0).contains(&f) => Ok((f * n as f64).round() as usize),
            AttackSize::Fraction(f) => Err(Error::invalid(format!("attack fraction {f} not in [0, 1]"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attack {
    pub kind: AttackKind,
    pub n: usize,
    pub seed: u64,
    pub vertices: BTreeSet<Vertex>,
    pub oblivious: bool,
}

impl Attack {
    pub fn custom(n: usize, vertices: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let vertices: BTreeSet<_> = vertices.into_iter().collect();
        if let Some(&v) = vertices.iter().find(|&&v| v == 0 || v > n) {
            return Err(Error::invalid(format!("vertex {v} outside [1, {n}]")));
        }
        Ok(Attack {
            kind: AttackKind::Custom,
            n,
            seed: 0,
            vertices,
            oblivious: true,
        })
    }

    pub fn empty(n: usize) -> Self {
        Attack::custom(n, []).unwrap()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn mask(&self) -> AttackMask {
        AttackMask::from_vertices(self.n, self.vertices.iter().copied())
    }
}

/// Dense membership test for an attack on `[n]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackMask(Vec<bool>);

impl AttackMask {
    pub fn from_vertices(n: usize, vertices: impl IntoIterator<Item = Vertex>) -> Self {
        let mut m = vec![false; n];
        for v in vertices {
            m[v - 1] = true;
        }
        AttackMask(m)
    }

    pub fn none(n: usize) -> Self {
        AttackMask(vec![false; n])
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        self.0[v - 1]
    }

    pub fn insert(&mut self, v: Vertex) {
        self.0[v - 1] = true;
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn vertices(&self) -> BTreeSet<Vertex> {
        (1..=self.n()).filter(|&v| self.contains(v)).collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

fn attack_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(Namespace::Attack, seed, &[]))
}

/// Oblivious attack generation. `runs` is the number of blocks for
/// `Multiblock` and is ignored otherwise.
pub fn generate(kind: AttackKind, n: usize, size: AttackSize, runs: usize, seed: u64) -> Result<Attack> {
    let k = size.count(n)?;
    let mut rng = attack_rng(seed);
    let vertices: BTreeSet<Vertex> = match kind {
        AttackKind::Uniform => sample(&mut rng, n, k).into_iter().map(|i| i + 1).collect(),
        AttackKind::Block => {
            if k == 0 {
                BTreeSet::new()
            } else {
                let start = rng.gen_range(1..=n - k + 1);
                (start..start + k).collect()
            }
        }
        AttackKind::Multiblock => multiblock(&mut rng, n, k, runs.max(1))?,
        AttackKind::Periodic => {
            let frac = match size {
                AttackSize::Fraction(f) => f,
                AttackSize::Count(c) => c as f64 / n as f64,
            };
            if frac <= 0.0 {
                BTreeSet::new()
            } else {
                let step = (1.0 / frac).ceil() as usize;
                (1..=n).step_by(step.max(1)).collect()
            }
        }
        AttackKind::Custom => {
            return Err(Error::invalid("custom attacks are loaded, not generated"))
        }
        AttackKind::RemarkMiddle => {
            return Err(Error::invalid(
                "remark-middle needs the built spanner; use remark_middle()",
            ))
        }
    };
    Ok(Attack {
        kind,
        n,
        seed,
        vertices,
        oblivious: true,
    })
}

/// `runs` disjoint blocks with total size `k`, separated by at least one
/// surviving vertex.
fn multiblock(rng: &mut ChaCha8Rng, n: usize, k: usize, runs: usize) -> Result<BTreeSet<Vertex>> {
    let runs = runs.min(k.max(1));
    if k == 0 {
        return Ok(BTreeSet::new());
    }
    if k + runs - 1 > n {
        return Err(Error::invalid(format!(
            "{runs} separated blocks of total size {k} do not fit in {n}"
        )));
    }
    // Split k into `runs` positive lengths.
    let mut cuts: Vec<usize> = sample(rng, k - 1, runs - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut lengths = Vec::with_capacity(runs);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(k)) {
        lengths.push(c - prev);
        prev = c;
    }
    // Distribute the n - k free vertices into runs + 1 gaps, inner gaps >= 1.
    let free = n - k - (runs - 1);
    let mut slots: Vec<usize> = sample(rng, free + runs, runs).into_iter().collect();
    slots.sort_unstable();
    let mut gaps = Vec::with_capacity(runs);
    let mut prev = 0;
    for (i, s) in slots.into_iter().enumerate() {
        gaps.push(s - i - prev);
        prev = s - i;
    }
    let mut out = BTreeSet::new();
    let mut pos = 1;
    for (i, (&len, &gap)) in lengths.iter().zip(&gaps).enumerate() {
        pos += gap + usize::from(i > 0);
        out.extend(pos..pos + len);
        pos += len;
    }
    Ok(out)
}

/// Removes, on every connected level `i`, the `c(M)` members of `P_i`
/// closest to `n/2`. Every level's edges then fall short of crossing the
/// middle, splitting the graph in two.
pub fn remark_middle(spanner: &Spanner1D) -> Attack {
    let n = spanner.gradation().n();
    let top = spanner.top_level();
    let width = spanner.conn(top).unwrap_or(0) as usize;
    // Midpoint n/2 + 1/2, doubled to stay integral.
    let mid2 = n + 1;
    let mut vertices = BTreeSet::new();
    for i in 0..=top {
        let members = spanner.level_members(i);
        let mut by_distance: Vec<Vertex> = members.to_vec();
        by_distance.sort_by_key(|&v| ((2 * v).abs_diff(mid2), v));
        vertices.extend(by_distance.into_iter().take(width));
    }
    Attack {
        kind: AttackKind::RemarkMiddle,
        n,
        seed: spanner.gradation().seed(),
        vertices,
        oblivious: false,
    }
}
