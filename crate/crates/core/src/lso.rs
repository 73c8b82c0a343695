//! Locality-sensitive orderings of `[0,1)^d`.
//!
//! Each ordering is a shifted, compressed quadtree order. Coordinates are
//! fixed-point integers with `W` fractional bits; shift `j` adds
//! `floor(j 2^W / D)` to every coordinate, so shifted points live in
//! `[0, 2)^d` and the quadtree root has side 2. Levels are grouped into
//! blocks of `h` levels, starting after an offset `r`. A block node has
//! `m = 2^{dh}` descendant cells `h` levels down, and an ordering lists them
//! along one Hamiltonian path of a fixed decomposition of `K_m` into `m/2`
//! paths. Any two cells are consecutive on exactly one of those paths.
//!
//! For a pair at distance `l`, some shift puts both points in a common cell
//! of side at most `2 D l`; its cells `h` levels down have diameter at most
//! `varsigma * l`, and picking the offset and path that make the two cells
//! adjacent confines everything between the points to those two cells.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractional bits per coordinate.
pub const W: u32 = 53;
/// Bit levels of a shifted coordinate (`[0, 2)` with `W` fractional bits).
const LEVELS: u32 = W + 1;

/// A point of `[0,1)^d` in fixed point: `x = X / 2^W`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FixedPoint(pub Vec<u64>);

impl FixedPoint {
    pub fn from_unit(coords: &[f64]) -> Result<Self> {
        let scale = (1u64 << W) as f64;
        coords
            .iter()
            .map(|&x| {
                if (0.0..1.0).contains(&x) {
                    Ok(((x * scale) as u64).min((1u64 << W) - 1))
                } else {
                    Err(Error::invalid(format!("coordinate {x} outside [0, 1)")))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(FixedPoint)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_unit(&self) -> Vec<f64> {
        let scale = (1u64 << W) as f64;
        self.0.iter().map(|&x| x as f64 / scale).collect()
    }

    pub fn dist(&self, other: &FixedPoint) -> f64 {
        let scale = (1u64 << W) as f64;
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| {
                let t = a.abs_diff(b) as f64 / scale;
                t * t
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// The shifted quadtree family.
    Shifted,
    /// A single unshifted Z-order; in one dimension, the numeric order.
    Identity,
}

/// Serializable description; the orderings themselves are enumerated by
/// index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingFamily {
    pub kind: FamilyKind,
    pub varsigma: f64,
    pub d: usize,
    pub w: u32,
    /// Number of shifts `D = 2 ceil(d/2) + 1`.
    pub shifts: u64,
    /// Levels per block.
    pub block: u32,
}

/// One member of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LsoOrdering {
    pub shift: u64,
    pub offset: u32,
    pub path: u64,
}

/// Conditions (i)-(iv) hold for `ordering` (or its reverse when
/// `reversed`), splitting the points strictly between `p` and `q` after
/// `split` of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LsoWitness {
    pub index: u64,
    pub ordering: LsoOrdering,
    pub reversed: bool,
    /// Probes strictly between the endpoints, in order from `p` to `q`.
    pub between: Vec<usize>,
    /// `between[..split]` is near `p`, the rest near `q`.
    pub split: usize,
    /// Pivot: the endpoint `p` when `split == 0`, else `between[split - 1]`.
    pub pivot: Option<usize>,
}

impl OrderingFamily {
    pub fn build(varsigma: f64, d: usize) -> Result<Self> {
        if !(varsigma > 0.0 && varsigma < 1.0) {
            return Err(Error::invalid(format!("varsigma = {varsigma} not in (0, 1)")));
        }
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let shifts = 2 * d.div_ceil(2) as u64 + 1;
        let block = (2.0 * shifts as f64 * (d as f64).sqrt() / varsigma).log2().ceil() as u32;
        if d as u32 * block > 62 {
            return Err(Error::invalid(format!(
                "d = {d} with varsigma = {varsigma} needs {} bits per block; at most 62 supported",
                d as u32 * block
            )));
        }
        Ok(OrderingFamily {
            kind: FamilyKind::Shifted,
            varsigma,
            d,
            w: W,
            shifts,
            block,
        })
    }

    pub fn identity(d: usize) -> Self {
        OrderingFamily {
            kind: FamilyKind::Identity,
            varsigma: 1.0,
            d,
            w: W,
            shifts: 1,
            block: 1,
        }
    }

    /// Cells per block node, `2^{d h}`.
    fn cells(&self) -> u64 {
        1u64 << (self.d as u32 * self.block)
    }

    pub fn count(&self) -> u64 {
        match self.kind {
            FamilyKind::Identity => 1,
            FamilyKind::Shifted => self.shifts * self.block as u64 * (self.cells() / 2),
        }
    }

    /// `C` with `count <= C varsigma^{-d} ceil(log2 1/varsigma)` for every
    /// `varsigma` in this dimension.
    pub fn count_constant(d: usize) -> f64 {
        let shifts = (2 * d.div_ceil(2) + 1) as f64;
        let base = 4.0 * shifts * (d as f64).sqrt();
        shifts / 2.0 * base.powi(d as i32) * (1.0 + base.log2())
    }

    pub fn get(&self, index: u64) -> LsoOrdering {
        assert!(index < self.count(), "ordering index out of range");
        if self.kind == FamilyKind::Identity {
            return LsoOrdering { shift: 0, offset: 0, path: 0 };
        }
        let paths = self.cells() / 2;
        let path = index % paths;
        let rest = index / paths;
        LsoOrdering {
            shift: rest / self.block as u64,
            offset: (rest % self.block as u64) as u32,
            path,
        }
    }

    pub fn index_of(&self, o: &LsoOrdering) -> u64 {
        if self.kind == FamilyKind::Identity {
            return 0;
        }
        (o.shift * self.block as u64 + o.offset as u64) * (self.cells() / 2) + o.path
    }

    fn shift_amount(&self, shift: u64) -> u64 {
        ((shift as u128 * (1u128 << W)) / self.shifts as u128) as u64
    }

    /// Number of leading bit levels shared by all shifted coordinates.
    fn common_levels(p: &FixedPoint, q: &FixedPoint, s: u64) -> u32 {
        p.0.iter()
            .zip(&q.0)
            .map(|(&x, &y)| (((x + s) ^ (y + s)).leading_zeros() - (64 - LEVELS)).min(LEVELS))
            .min()
            .unwrap()
    }

    /// Interleaved bits of levels `first..first + len` (1-based from the
    /// root) of the shifted point, most significant level first; levels past
    /// the last real one read as zero.
    fn digit(&self, p: &FixedPoint, s: u64, first: u32, len: u32) -> u64 {
        let mut c = 0u64;
        for level in first..first + len {
            for &coord in &p.0 {
                let bit = if level <= LEVELS { (coord + s) >> (LEVELS - level) & 1 } else { 0 };
                c = c << 1 | bit;
            }
        }
        c
    }

    /// Position of cell `c` along path `k`.
    fn position(&self, k: u64, c: u64) -> u64 {
        let m = self.cells();
        let x = (c + m - k) % m;
        if x == 0 {
            0
        } else if x <= m / 2 {
            2 * x - 1
        } else {
            2 * (m - x)
        }
    }

    /// The block containing bit level `level`: `(first level, length)`.
    fn block_of(&self, o: &LsoOrdering, level: u32) -> (u32, u32) {
        if level <= o.offset {
            (1, o.offset)
        } else {
            let b = (level - o.offset - 1) / self.block;
            (o.offset + b * self.block + 1, self.block)
        }
    }

    fn check_dims(&self, p: &FixedPoint, q: &FixedPoint) -> Result<()> {
        if p.dim() != self.d || q.dim() != self.d {
            return Err(Error::invalid(format!("points must have dimension {}", self.d)));
        }
        Ok(())
    }

    /// Compares `p` and `q` under `o`; decided by the first block in which
    /// their digits differ.
    pub fn compare(&self, o: &LsoOrdering, p: &FixedPoint, q: &FixedPoint) -> Result<Ordering> {
        self.check_dims(p, q)?;
        if p == q {
            return Err(Error::invalid("cannot order a point against itself"));
        }
        Ok(self.compare_unchecked(o, p, q))
    }

    pub(crate) fn compare_unchecked(&self, o: &LsoOrdering, p: &FixedPoint, q: &FixedPoint) -> Ordering {
        let s = self.shift_amount(o.shift);
        let common = Self::common_levels(p, q, s);
        if common == LEVELS {
            return Ordering::Equal;
        }
        if self.kind == FamilyKind::Identity {
            return self.digit(p, s, common + 1, 1).cmp(&self.digit(q, s, common + 1, 1));
        }
        let (first, len) = self.block_of(o, common + 1);
        let (x, y) = (self.digit(p, s, first, len), self.digit(q, s, first, len));
        if first == 1 && len == o.offset {
            x.cmp(&y)
        } else {
            self.position(o.path, x).cmp(&self.position(o.path, y))
        }
    }

    /// Block digits in order; lexicographic comparison of keys agrees with
    /// [`OrderingFamily::compare`].
    pub fn key(&self, o: &LsoOrdering, p: &FixedPoint) -> Vec<u64> {
        let s = self.shift_amount(o.shift);
        if self.kind == FamilyKind::Identity {
            return (1..=LEVELS).map(|l| self.digit(p, s, l, 1)).collect();
        }
        let mut key = vec![self.digit(p, s, 1, o.offset)];
        let mut first = o.offset + 1;
        while first <= LEVELS {
            key.push(self.position(o.path, self.digit(p, s, first, self.block)));
            first += self.block;
        }
        key
    }

    /// Orderings worth trying first for the pair: for each shift, the one
    /// that makes the two cells below their lowest common ancestor adjacent,
    /// when those cells are small enough.
    pub fn candidates(&self, p: &FixedPoint, q: &FixedPoint) -> Vec<LsoOrdering> {
        if self.kind == FamilyKind::Identity {
            return vec![self.get(0)];
        }
        let ell = p.dist(q);
        let mut out = Vec::new();
        for shift in 0..self.shifts {
            let s = self.shift_amount(shift);
            let common = Self::common_levels(p, q, s);
            if common == LEVELS {
                continue;
            }
            let cell_side = 2f64.powi(-((common + self.block) as i32) + 1);
            if cell_side * (self.d as f64).sqrt() > self.varsigma * ell {
                continue;
            }
            let offset = common % self.block;
            let first = common + 1;
            let (x, y) = (self.digit(p, s, first, self.block), self.digit(q, s, first, self.block));
            let path = ((x + y) % self.cells()) / 2;
            out.push(LsoOrdering { shift, offset, path });
        }
        out
    }

    /// Looks for an ordering satisfying the locality conditions for `p`,
    /// `q` over `probes`. `p` and `q` are indices into `probes`. Analytic
    /// candidates are tried first in family order; then, if `exhaustive`,
    /// the whole family.
    pub fn verify_lso_property(
        &self,
        probes: &[FixedPoint],
        p: usize,
        q: usize,
        exhaustive: bool,
    ) -> Option<LsoWitness> {
        let (pp, qq) = (&probes[p], &probes[q]);
        if pp == qq {
            return None;
        }
        let mut cands = self.candidates(pp, qq);
        cands.sort_by_key(|o| self.index_of(o));
        for o in &cands {
            if let Some(w) = self.check_ordering(probes, p, q, o) {
                return Some(w);
            }
        }
        if exhaustive {
            for index in 0..self.count() {
                let o = self.get(index);
                if cands.contains(&o) {
                    continue;
                }
                if let Some(w) = self.check_ordering(probes, p, q, &o) {
                    return Some(w);
                }
            }
        }
        None
    }

    /// Tests conditions (i)-(iv) for one ordering over the probe set.
    pub fn check_ordering(&self, probes: &[FixedPoint], p: usize, q: usize, o: &LsoOrdering) -> Option<LsoWitness> {
        let (pp, qq) = (&probes[p], &probes[q]);
        let reversed = self.compare_unchecked(o, pp, qq) == Ordering::Greater;
        let toward_q = |a: &FixedPoint, b: &FixedPoint| {
            let c = self.compare_unchecked(o, a, b);
            if reversed {
                c.reverse()
            } else {
                c
            }
        };
        let mut between: Vec<usize> = (0..probes.len())
            .filter(|&z| {
                toward_q(pp, &probes[z]) == Ordering::Less && toward_q(&probes[z], qq) == Ordering::Less
            })
            .collect();
        between.sort_by(|&a, &b| toward_q(&probes[a], &probes[b]));
        let radius = self.varsigma * pp.dist(qq);
        let near_p = between.iter().take_while(|&&z| probes[z].dist(pp) <= radius).count();
        let ok = between[near_p..].iter().all(|&z| probes[z].dist(qq) <= radius);
        // Any split up to `near_p` works; the largest keeps the pivot closest
        // to the middle.
        ok.then(|| LsoWitness {
            index: self.index_of(o),
            ordering: *o,
            reversed,
            pivot: near_p.checked_sub(1).map(|k| between[k]),
            between,
            split: near_p,
        })
    }
}
