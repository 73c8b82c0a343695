//! Monte Carlo driver: one fixed oblivious attack, many independently seeded
//! constructions, per-trial loss reports and an aggregate summary.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::attacks::{generate, Attack, AttackKind, AttackSize};
use crate::error::{Error, Result};
use crate::hash::{derive_seed, Namespace};
use crate::loss::{loss_report, Variant};
use crate::resilience1d::{classify_bad, damaged_pairs_1d};
use crate::spanner1d::{Params1D, Spanner1D, DEFAULT_C_CONST};
use crate::spannerhd::build_hd;

/// One-sided 95% normal quantile.
pub const Z95: f64 = 1.6448536269514722;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "1d")]
    Line,
    #[serde(rename = "hd")]
    Euclidean,
}

/// Constants the guarantee needs, or small ones with no guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Theoretical,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub size: AttackSize,
    #[serde(default)]
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub variant: Dimension,
    pub regime: Regime,
    pub n: usize,
    /// Dimension of the random point set for `hd`.
    #[serde(default)]
    pub dim: Option<usize>,
    pub rho: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Stretch parameter for `hd`.
    #[serde(default)]
    pub eps: Option<f64>,
    pub c_const: f64,
    pub attack: AttackSpec,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.regime == Regime::Theoretical && self.c_const < DEFAULT_C_CONST {
            return Err(Error::invalid(format!(
                "theoretical regime needs c_const >= {DEFAULT_C_CONST}, got {}",
                self.c_const
            )));
        }
        if matches!(self.attack.kind, AttackKind::RemarkMiddle | AttackKind::Custom) {
            return Err(Error::invalid("experiments use a generated oblivious attack"));
        }
        if self.variant == Dimension::Euclidean && (self.dim.is_none() || self.eps.is_none()) {
            return Err(Error::invalid("hd experiments need dim and eps"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let spec: ExperimentSpec = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub variant: String,
    pub rho: f64,
    pub delta: Option<f64>,
    pub c_const: f64,
    pub edges: u64,
    pub attack_size: usize,
    pub bad_pairs: usize,
    pub ext_lower: usize,
    pub ext_upper: usize,
    pub loss_lower: Option<f64>,
    pub loss_upper: Option<f64>,
    pub defects: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub regime: Regime,
    pub variant: Dimension,
    pub trials: usize,
    pub rho: f64,
    pub delta: Option<f64>,
    pub c_const: f64,
    pub attack_size: usize,
    /// Mean of the per-trial upper loss bounds; `None` for an empty attack.
    pub mean_loss: Option<f64>,
    pub sd_loss: Option<f64>,
    /// One-sided 95% upper confidence bound on the mean loss.
    pub mean_loss_ci_upper: Option<f64>,
    /// Empirical frequency of `loss > rho`.
    pub tail_freq: Option<f64>,
    /// One-sided 95% upper bound on `Pr[loss > rho]`; exact binomial
    /// below 100 trials.
    pub tail_ci_upper: Option<f64>,
    /// Trials where the extension was only bracketed.
    pub inexact_trials: usize,
    pub edge_stats: EdgeStats,
    pub defect_count: usize,
}

/// Upper one-sided Clopper-Pearson bound for `k` successes in `t` trials.
pub fn clopper_pearson_upper(k: usize, t: usize, level: f64) -> f64 {
    if k >= t {
        return 1.0;
    }
    Beta::new(k as f64 + 1.0, (t - k) as f64).unwrap().inverse_cdf(level)
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    derive_seed(Namespace::Trial, base, &[trial as u64])
}

/// Uniform random points in `[0,1)^dim`.
pub fn random_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(Namespace::Sample, seed, &[]));
    (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect()
}

fn run_one(spec: &ExperimentSpec, attack: &Attack, trial: usize) -> Result<TrialRow> {
    let seed = trial_seed(spec.seed, trial);
    let mask = attack.mask();
    let (edges, report, defects) = match spec.variant {
        Dimension::Line => {
            let s = Spanner1D::construct(spec.n, spec.rho, spec.delta, spec.c_const, seed)?;
            let edges = s.edge_count().total;
            let pairs = damaged_pairs_1d(&s, &mask);
            let variant = if spec.delta.is_some() { Variant::Probabilistic } else { Variant::Expectation };
            let report = if attack.is_empty() {
                None
            } else {
                Some(loss_report(&mask, &pairs, variant)?)
            };
            // Two stairway points always have a monotone path, so a damaged
            // pair with both ends good is a defect.
            let defects = if pairs.is_empty() {
                0
            } else {
                let bad = classify_bad(&s, &mask);
                pairs.iter().filter(|&&(u, v)| !bad.bad[u - 1] && !bad.bad[v - 1]).count()
            };
            (edges, report, defects)
        }
        Dimension::Euclidean => {
            let dim = spec.dim.unwrap();
            let eps = spec.eps.unwrap();
            let points = random_points(spec.n, dim, spec.seed);
            let s = build_hd(points, eps, spec.rho, spec.delta, spec.c_const, seed)?;
            let pairs = s.damaged_pairs_hd(&mask);
            let last = s.bad_sequence(&mask).pop().unwrap();
            let defects = pairs.iter().filter(|&&(u, v)| !last.contains(u) && !last.contains(v)).count();
            let variant = if spec.delta.is_some() { Variant::Probabilistic } else { Variant::Expectation };
            let report = if attack.is_empty() {
                None
            } else {
                Some(loss_report(&mask, &pairs, variant)?)
            };
            (s.edge_count(), report, defects)
        }
    };
    Ok(TrialRow {
        trial,
        seed,
        n: spec.n,
        variant: match spec.variant {
            Dimension::Line => "1d".into(),
            Dimension::Euclidean => "hd".into(),
        },
        rho: spec.rho,
        delta: spec.delta,
        c_const: spec.c_const,
        edges,
        attack_size: attack.len(),
        bad_pairs: report.as_ref().map_or(0, |r| r.bad_pairs),
        ext_lower: report.as_ref().map_or(0, |r| r.extension_lower),
        ext_upper: report.as_ref().map_or(0, |r| r.extension_upper),
        loss_lower: report.as_ref().map(|r| r.loss_lower()),
        loss_upper: report.as_ref().map(|r| r.loss_upper()),
        defects,
    })
}

/// Runs every trial and aggregates in trial order.
pub fn run_trials(spec: &ExperimentSpec) -> Result<(Summary, Vec<TrialRow>)> {
    spec.validate()?;
    let a = &spec.attack;
    let attack = generate(a.kind, spec.n, a.size, a.runs, a.seed)?;
    let rows = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_one(spec, &attack, t))
        .collect::<Result<Vec<_>>>()?;
    Ok((summarize(spec, attack.len(), &rows), rows))
}

pub fn summarize(spec: &ExperimentSpec, attack_size: usize, rows: &[TrialRow]) -> Summary {
    let t = rows.len();
    let losses: Vec<f64> = rows.iter().filter_map(|r| r.loss_upper).collect();
    let (mean, sd, ci, tail, tail_ci) = if losses.len() == t && t > 0 {
        let tf = t as f64;
        let mean = losses.iter().sum::<f64>() / tf;
        let var = if t > 1 {
            losses.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (tf - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        let exceed = losses.iter().filter(|&&x| x > spec.rho).count();
        let freq = exceed as f64 / tf;
        let tail_ci = if t < 100 {
            clopper_pearson_upper(exceed, t, 0.95)
        } else {
            (freq + Z95 * (freq * (1.0 - freq) / tf).sqrt()).min(1.0)
        };
        (Some(mean), Some(sd), Some(mean + Z95 * sd / tf.sqrt()), Some(freq), Some(tail_ci))
    } else {
        (None, None, None, None, None)
    };
    let edges: Vec<u64> = rows.iter().map(|r| r.edges).collect();
    Summary {
        regime: spec.regime,
        variant: spec.variant,
        trials: t,
        rho: spec.rho,
        delta: spec.delta,
        c_const: spec.c_const,
        attack_size,
        mean_loss: mean,
        sd_loss: sd,
        mean_loss_ci_upper: ci,
        tail_freq: tail,
        tail_ci_upper: tail_ci,
        inexact_trials: rows.iter().filter(|r| r.ext_lower != r.ext_upper).count(),
        edge_stats: EdgeStats {
            min: edges.iter().copied().min().unwrap_or(0),
            max: edges.iter().copied().max().unwrap_or(0),
            mean: edges.iter().sum::<u64>() as f64 / t.max(1) as f64,
        },
        defect_count: rows.iter().map(|r| r.defects).sum(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e.into(),
        })?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub eps_step: f64,
    pub top_level: usize,
    pub edges: u64,
    /// `edges / (n_padded / eps_step)`.
    pub ratio: f64,
    /// Edge count over the previous row's.
    pub growth: Option<f64>,
}

/// Closed-form 1-D edge totals across `ns`.
pub fn edge_scaling(ns: &[usize], rho: f64, delta: Option<f64>, c_const: f64, seed: u64) -> Result<Vec<ScalingRow>> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sizes must be strictly ascending"));
    }
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let p = Params1D::derive(n, rho, delta, c_const)?;
        let s = Spanner1D::construct(n, rho, delta, c_const, derive_seed(Namespace::Trial, seed, &[n as u64]))?;
        let edges = s.edge_count().total;
        let growth = rows.last().map(|r| edges as f64 / r.edges as f64);
        rows.push(ScalingRow {
            n,
            eps_step: p.eps_step,
            top_level: p.top_level,
            edges,
            ratio: edges as f64 * p.eps_step / n.next_power_of_two() as f64,
            growth,
        });
    }
    Ok(rows)
}
