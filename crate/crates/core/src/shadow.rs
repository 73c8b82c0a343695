//! α-shadows of an attack on `[n]` and the round classification built on them.
//!
//! `i` is in the left shadow when some interval `[i..j]` has at least an `α`
//! fraction attacked; the right shadow uses intervals `[h..i]`. Thresholds are
//! exact rationals: membership is decided by `den * |I ∩ B| >= num * |I|`.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::gradation::Vertex;

/// A density threshold `num / den` in `(0, 1]`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Alpha {
    num: u128,
    den: u128,
}

impl fmt::Debug for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Alpha {
    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::invalid(format!("alpha = {num}/{den} not in (0, 1]")));
        }
        Ok(Self::reduced(num as u128, den as u128))
    }

    /// The exact dyadic value of `x`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::invalid(format!("alpha = {x} not in (0, 1]")));
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        if exp == 0 {
            return Err(Error::invalid("subnormal alpha"));
        }
        let mantissa = (bits & ((1 << 52) - 1)) | (1 << 52);
        // x = mantissa * 2^(exp - 1075) and exp - 1075 is in [-1074, 0].
        let shift = 1075 - exp;
        if shift > 100 {
            return Err(Error::invalid(format!("alpha = {x} too small")));
        }
        Ok(Self::reduced(mantissa as u128, 1u128 << shift))
    }

    fn reduced(num: u128, den: u128) -> Self {
        let g = gcd(num, den);
        Alpha {
            num: num / g,
            den: den / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `alpha / 2^k`.
    pub fn halved(self, k: u32) -> Self {
        let tz = self.num.trailing_zeros().min(k);
        let num = self.num >> tz;
        let rest = k - tz;
        assert!(
            self.den.leading_zeros() > rest + 32,
            "alpha denominator overflow"
        );
        Alpha {
            num,
            den: self.den << rest,
        }
    }

    /// `attacked / len >= alpha`.
    pub fn reached_by(self, attacked: u64, len: u64) -> bool {
        self.den * attacked as u128 >= self.num * len as u128
    }

    pub fn is_valid_open_unit(self) -> bool {
        self.num < self.den
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowProfile {
    pub alpha: Alpha,
    pub left: BTreeSet<Vertex>,
    pub right: BTreeSet<Vertex>,
    pub combined: BTreeSet<Vertex>,
}

/// Membership flags for `1..=n`, index `v - 1`.
pub(crate) struct ShadowFlags {
    pub left: Vec<bool>,
    pub right: Vec<bool>,
}

fn attacked_mask(attack: &BTreeSet<Vertex>, n: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &b in attack {
        if b == 0 || b > n {
            return Err(Error::invalid(format!("attacked vertex {b} outside [1, {n}]")));
        }
        mask[b - 1] = true;
    }
    Ok(mask)
}

/// Linear-time shadow flags. With `g(j) = den * prefix(j) - num * j`,
/// `i` is in the left shadow iff `max_{j >= i} g(j) >= g(i - 1)` and in the
/// right shadow iff `g(i) >= min_{h < i} g(h)`.
pub(crate) fn shadow_flags(mask: &[bool], alpha: Alpha) -> ShadowFlags {
    let n = mask.len();
    let num = alpha.num as i128;
    let den = alpha.den as i128;
    let mut g = Vec::with_capacity(n + 1);
    g.push(0i128);
    let mut prefix = 0i128;
    for (j, &hit) in mask.iter().enumerate() {
        prefix += hit as i128;
        g.push(den * prefix - num * (j as i128 + 1));
    }
    let mut left = vec![false; n];
    let mut suffix_max = i128::MIN;
    for i in (1..=n).rev() {
        suffix_max = suffix_max.max(g[i]);
        left[i - 1] = suffix_max >= g[i - 1];
    }
    let mut right = vec![false; n];
    let mut prefix_min = i128::MAX;
    for i in 1..=n {
        prefix_min = prefix_min.min(g[i - 1]);
        right[i - 1] = g[i] >= prefix_min;
    }
    ShadowFlags { left, right }
}

pub fn compute_shadow(attack: &BTreeSet<Vertex>, alpha: Alpha, n: usize) -> Result<ShadowProfile> {
    if !alpha.is_valid_open_unit() {
        return Err(Error::invalid(format!("alpha {alpha:?} not in (0, 1)")));
    }
    let mask = attacked_mask(attack, n)?;
    let flags = shadow_flags(&mask, alpha);
    let collect = |f: &[bool]| -> BTreeSet<Vertex> {
        f.iter()
            .enumerate()
            .filter(|(_, &x)| x)
            .map(|(i, _)| i + 1)
            .collect()
    };
    let left = collect(&flags.left);
    let right = collect(&flags.right);
    let combined = left.union(&right).copied().collect();
    Ok(ShadowProfile {
        alpha,
        left,
        right,
        combined,
    })
}

/// Round depth of every vertex: the least `k` with `v ∈ S_{sp / 2^k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundClassification {
    pub sp: Alpha,
    /// `depth[v - 1]`; `None` only when nothing is attacked.
    pub depth: Vec<Option<u32>>,
}

impl RoundClassification {
    pub fn depth(&self, v: Vertex) -> Option<u32> {
        self.depth[v - 1]
    }

    /// Vertices buried exactly in round `k` (for `k = 0`, the set `S_0`).
    pub fn round(&self, k: u32) -> Vec<Vertex> {
        self.depth
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == Some(k))
            .map(|(i, _)| i + 1)
            .collect()
    }
}

pub fn classify_rounds(attack: &BTreeSet<Vertex>, sp: Alpha, n: usize) -> Result<RoundClassification> {
    if !sp.is_valid_open_unit() {
        return Err(Error::invalid(format!("sp {sp:?} not in (0, 1)")));
    }
    let mask = attacked_mask(attack, n)?;
    let cap = n.max(1).next_power_of_two().trailing_zeros();
    let mut depth = vec![None; n];
    let mut open = n;
    for k in 0..=cap {
        if open == 0 {
            break;
        }
        let flags = shadow_flags(&mask, sp.halved(k));
        for v in 0..n {
            if depth[v].is_none() && (flags.left[v] || flags.right[v]) {
                depth[v] = Some(k);
                open -= 1;
            }
        }
    }
    Ok(RoundClassification { sp, depth })
}
