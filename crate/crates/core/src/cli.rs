//! `rspan` command line: build, attack, loss, path, lso-check, experiment.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{generate, remark_middle, Attack, AttackKind, AttackSize};
use crate::error::{Error, Result};
use crate::gradation::{Gradation, Vertex};
use crate::harness::{random_points, run_trials, write_csv, write_json, ExperimentSpec};
use crate::hash::{derive_seed, Namespace};
use crate::loss::{loss_1d, loss_report, LossReport, Variant};
use crate::lso::{FixedPoint, OrderingFamily};
use crate::resilience1d::{classify_bad, damaged_pairs_1d, monotone_path};
use crate::spanner1d::{Params1D, Spanner1D, DEFAULT_C_CONST};
use crate::spannerhd::{build_hd, HdBundle, SpannerHD};

/// JSON schema version written into every file.
pub const FORMAT: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DEFECT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rspan", version, about = "Reliable spanners under oblivious vertex attacks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a 1-D spanner on [n] or a d-dimensional one on a point set.
    Build(BuildArgs),
    /// Generate an attack set.
    Attack(AttackArgs),
    /// Damaged-set extension and loss rate of a spanner under an attack.
    Loss(LossArgs),
    /// Path between two surviving vertices.
    Path(PathArgs),
    /// Check the locality property of an ordering family on random pairs.
    LsoCheck(LsoArgs),
    /// Run a Monte Carlo experiment from a JSON spec.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Vertices 1..=n on the line.
    #[arg(long, conflicts_with = "points_file")]
    pub n: Option<usize>,
    /// Points, one per line, whitespace-separated coordinates.
    #[arg(long)]
    pub points_file: Option<PathBuf>,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Stretch parameter; selects the d-dimensional construction.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Dimension of random points when `--n` is used with `--eps`.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_C_CONST)]
    pub c_const: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also list every edge, per level.
    #[arg(long)]
    pub explicit: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub kind: AttackKind,
    /// Vertex count, or a fraction of n when it contains a '.'.
    #[arg(long)]
    pub size: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Needed by `remark-middle`, which looks at the built spanner.
    #[arg(long)]
    pub spanner: Option<PathBuf>,
    /// Comma-separated vertices for `custom`.
    #[arg(long)]
    pub vertices: Option<String>,
    /// Number of blocks for `multiblock`.
    #[arg(long, default_value_t = 4)]
    pub runs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub spanner: PathBuf,
    #[arg(long)]
    pub attack: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[arg(long)]
    pub spanner: PathBuf,
    /// Without an attack nothing is removed.
    #[arg(long)]
    pub attack: Option<PathBuf>,
    #[arg(long)]
    pub u: Vertex,
    #[arg(long)]
    pub v: Vertex,
}

#[derive(Debug, Args)]
pub struct LsoArgs {
    #[arg(long)]
    pub varsigma: f64,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    /// Probe grid spacing is 2^-grid per axis.
    #[arg(long, default_value_t = 6)]
    pub grid: u32,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the summary path in the spec.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// 1-D spanner file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFile {
    pub params: Params1D,
    pub gradation: GradationFile,
    pub levels: Vec<LevelFile>,
    /// Edges follow from the level sets and reaches.
    pub implicit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradationFile {
    pub n: usize,
    pub seed: u64,
    pub level_of: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFile {
    pub i: usize,
    pub conn: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(Vertex, Vertex)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpannerFile {
    #[serde(rename = "1d")]
    Line(LineFile),
    #[serde(rename = "hd")]
    Euclidean { bundle: HdBundle, implicit: bool },
}

#[derive(Debug, Serialize, Deserialize)]
struct Versioned<T> {
    format: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackFile {
    pub kind: AttackKind,
    pub n: usize,
    pub seed: u64,
    pub oblivious: bool,
    pub vertices: Vec<Vertex>,
}

pub enum Loaded {
    Line(Spanner1D),
    Euclidean(Box<SpannerHD>),
}

impl Loaded {
    pub fn n(&self) -> usize {
        match self {
            Loaded::Line(s) => s.gradation().n(),
            Loaded::Euclidean(s) => s.n(),
        }
    }
}

pub fn line_file(s: &Spanner1D, explicit: bool) -> LineFile {
    let g = s.gradation();
    LineFile {
        params: s.params().clone(),
        gradation: GradationFile {
            n: g.n(),
            seed: g.seed(),
            level_of: g.level_map().to_vec(),
        },
        levels: (0..=s.top_level())
            .map(|i| LevelFile {
                i,
                conn: s.conn(i).unwrap(),
                edges: explicit.then(|| s.level_edges(i).collect()),
            })
            .collect(),
        implicit: !explicit,
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    let v: Versioned<T> = serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    if v.format != FORMAT {
        return Err(Error::invalid(format!("{}: unsupported format {}", path.display(), v.format)));
    }
    Ok(v.body)
}

pub fn load_spanner(path: &Path) -> Result<Loaded> {
    match parse_json::<SpannerFile>(path)? {
        SpannerFile::Line(f) => {
            let p = &f.params;
            let params = Params1D::derive(p.n, p.rho, p.delta, p.c_const)?;
            if params != f.params {
                return Err(Error::invalid("stored parameters do not match their derivation"));
            }
            let g = Gradation::from_parts(f.gradation.n, f.gradation.seed, f.gradation.level_of)?;
            let s = Spanner1D::build(g, params)?;
            let levels_ok = f.levels.len() == s.top_level() + 1
                && f.levels.iter().all(|l| s.conn(l.i) == Some(l.conn));
            if !levels_ok {
                return Err(Error::invalid("stored level reaches do not match the parameters"));
            }
            Ok(Loaded::Line(s))
        }
        SpannerFile::Euclidean { bundle, .. } => Ok(Loaded::Euclidean(Box::new(SpannerHD::from_bundle(bundle)?))),
    }
}

pub fn load_attack(path: &Path) -> Result<Attack> {
    let f: AttackFile = parse_json(path)?;
    let mut a = Attack::custom(f.n, f.vertices)?;
    a.kind = f.kind;
    a.seed = f.seed;
    a.oblivious = f.oblivious;
    Ok(a)
}

pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::invalid(format!("{}:{}: bad coordinate '{t}'", path.display(), i + 1)))
                })
                .collect()
        })
        .collect()
}

fn to_json<T: Serialize>(body: &T) -> Result<String> {
    let v = Versioned { format: FORMAT, body };
    let mut s = serde_json::to_string_pretty(&v).map_err(|source| Error::Json {
        context: "output".into(),
        source,
    })?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

fn seed_or_random(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        log::info!("no --seed given; using {s}");
        eprintln!("seed: {s}");
        s
    })
}

fn parse_size(s: &str) -> Result<AttackSize> {
    let parsed = if s.contains('.') {
        s.parse().ok().map(AttackSize::Fraction)
    } else {
        s.parse().ok().map(AttackSize::Count)
    };
    parsed.ok_or_else(|| Error::invalid(format!("bad attack size '{s}'")))
}

fn build(a: BuildArgs) -> Result<i32> {
    let seed = seed_or_random(a.seed);
    let file = match (a.eps, a.n, &a.points_file) {
        (None, Some(n), None) => {
            let s = Spanner1D::construct(n, a.rho, a.delta, a.c_const, seed)?;
            SpannerFile::Line(line_file(&s, a.explicit))
        }
        (Some(eps), n, path) => {
            let points = match (n, path) {
                (_, Some(path)) => read_points(path)?,
                (Some(n), None) => {
                    let dim = a.dim.ok_or_else(|| Error::invalid("--n with --eps needs --dim"))?;
                    random_points(n, dim, seed)
                }
                (None, None) => return Err(Error::invalid("give --n or --points-file")),
            };
            let s = build_hd(points, eps, a.rho, a.delta, a.c_const, seed)?;
            SpannerFile::Euclidean {
                bundle: s.bundle(),
                implicit: true,
            }
        }
        (None, _, Some(_)) => return Err(Error::invalid("a points file needs --eps")),
        (None, None, None) => return Err(Error::invalid("give --n or --points-file")),
    };
    emit(&to_json(&file)?, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn attack(a: AttackArgs) -> Result<i32> {
    let attack = match a.kind {
        AttackKind::RemarkMiddle => {
            let path = a.spanner.ok_or_else(|| Error::invalid("remark-middle needs --spanner"))?;
            match load_spanner(&path)? {
                Loaded::Line(s) => remark_middle(&s),
                Loaded::Euclidean(_) => return Err(Error::invalid("remark-middle is defined for 1-D spanners")),
            }
        }
        AttackKind::Custom => {
            let n = a.n.ok_or_else(|| Error::invalid("custom attacks need --n"))?;
            let list = a.vertices.unwrap_or_default();
            let vertices = list
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<Vertex>().map_err(|_| Error::invalid(format!("bad vertex '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            Attack::custom(n, vertices)?
        }
        kind => {
            let n = a.n.ok_or_else(|| Error::invalid("generated attacks need --n"))?;
            let size = parse_size(a.size.as_deref().ok_or_else(|| Error::invalid("--size is required"))?)?;
            generate(kind, n, size, a.runs, seed_or_random(a.seed))?
        }
    };
    let file = AttackFile {
        kind: attack.kind,
        n: attack.n,
        seed: attack.seed,
        oblivious: attack.oblivious,
        vertices: attack.vertices.iter().copied().collect(),
    };
    emit(&to_json(&file)?, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn warn_if_adaptive(a: &Attack) {
    if !a.oblivious {
        eprintln!("warning: non-oblivious attack; the reliability guarantee does not apply");
    }
}

/// Loss report plus the number of damaged pairs that contradict the bad set.
pub fn loss_for(s: &Loaded, a: &Attack) -> Result<(LossReport, usize)> {
    if a.n != s.n() {
        return Err(Error::invalid(format!("attack is on n = {}, spanner has n = {}", a.n, s.n())));
    }
    let mask = a.mask();
    match s {
        Loaded::Line(s) => {
            let report = loss_1d(s, &mask)?;
            let pairs = damaged_pairs_1d(s, &mask);
            let bad = classify_bad(s, &mask);
            let defects = pairs.iter().filter(|&&(u, v)| !bad.bad[u - 1] && !bad.bad[v - 1]).count();
            Ok((report, defects))
        }
        Loaded::Euclidean(s) => {
            let variant = if s.params().delta.is_some() { Variant::Probabilistic } else { Variant::Expectation };
            let pairs = s.damaged_pairs_hd(&mask);
            let report = loss_report(&mask, &pairs, variant)?;
            let last = s.bad_sequence(&mask).pop().unwrap();
            let defects = pairs.iter().filter(|&&(u, v)| !last.contains(u) && !last.contains(v)).count();
            Ok((report, defects))
        }
    }
}

fn loss(a: LossArgs) -> Result<i32> {
    let s = load_spanner(&a.spanner)?;
    let attack = load_attack(&a.attack)?;
    warn_if_adaptive(&attack);
    let (report, defects) = loss_for(&s, &attack)?;
    emit(&to_json(&report)?, a.out.as_deref())?;
    if defects > 0 {
        eprintln!("verifier defect: {defects} damaged pairs outside the bad set");
        return Ok(EXIT_DEFECT);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct PathOut {
    u: Vertex,
    v: Vertex,
    vertices: Option<Vec<Vertex>>,
    length: Option<f64>,
    stretch: Option<f64>,
    route: Option<String>,
}

fn path(a: PathArgs) -> Result<i32> {
    let s = load_spanner(&a.spanner)?;
    let attack = match &a.attack {
        Some(p) => load_attack(p)?,
        None => Attack::empty(s.n()),
    };
    warn_if_adaptive(&attack);
    if attack.n != s.n() {
        return Err(Error::invalid("attack and spanner disagree on n"));
    }
    let mask = attack.mask();
    let mut defect = false;
    let out = match &s {
        Loaded::Line(s) => {
            let p = monotone_path(s, &mask, a.u, a.v)?;
            match p {
                Some(p) => {
                    let length = p.vertices.windows(2).map(|w| w[0].abs_diff(w[1])).sum::<usize>() as f64;
                    PathOut {
                        u: a.u,
                        v: a.v,
                        stretch: Some(length / a.u.abs_diff(a.v) as f64),
                        length: Some(length),
                        route: Some(format!("{:?}", p.route).to_lowercase()),
                        vertices: Some(p.vertices),
                    }
                }
                None => PathOut {
                    u: a.u,
                    v: a.v,
                    vertices: None,
                    length: None,
                    stretch: None,
                    route: None,
                },
            }
        }
        Loaded::Euclidean(s) => {
            let bad = s.bad_sequence(&mask);
            match s.path_hd(&bad, a.u, a.v)? {
                Some(p) => {
                    defect = !p.defects.is_empty();
                    PathOut {
                        u: a.u,
                        v: a.v,
                        vertices: Some(p.vertices),
                        length: Some(p.length),
                        stretch: Some(p.stretch),
                        route: None,
                    }
                }
                None => PathOut {
                    u: a.u,
                    v: a.v,
                    vertices: None,
                    length: None,
                    stretch: None,
                    route: None,
                },
            }
        }
    };
    emit(&to_json(&out)?, None)?;
    Ok(if defect { EXIT_DEFECT } else { EXIT_OK })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsoReport {
    pub varsigma: f64,
    pub dim: usize,
    pub count: u64,
    pub count_constant: f64,
    pub pairs: usize,
    pub grid: u32,
    pub witnessed: usize,
    pub failures: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Random pairs checked against a probe grid plus the pair itself.
pub fn lso_check(varsigma: f64, dim: usize, pairs: usize, grid: u32, seed: u64) -> Result<LsoReport> {
    let family = OrderingFamily::build(varsigma, dim)?;
    if grid as usize * dim > 24 {
        return Err(Error::invalid("probe grid too fine"));
    }
    let side = 1usize << grid;
    let mut probes: Vec<FixedPoint> = (0..side.pow(dim as u32))
        .map(|mut idx| {
            let c: Vec<f64> = (0..dim)
                .map(|_| {
                    let x = idx % side;
                    idx /= side;
                    x as f64 / side as f64
                })
                .collect();
            FixedPoint::from_unit(&c).unwrap()
        })
        .collect();
    let base = probes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(Namespace::Sample, seed, &[]));
    let mut samples = Vec::with_capacity(pairs);
    while samples.len() < pairs {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let q: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let (fp, fq) = (FixedPoint::from_unit(&p)?, FixedPoint::from_unit(&q)?);
        if fp != fq {
            samples.push((p, q, fp, fq));
        }
    }
    probes.push(FixedPoint(vec![0; dim]));
    probes.push(FixedPoint(vec![0; dim]));
    let failures: Vec<(Vec<f64>, Vec<f64>)> = samples
        .par_iter()
        .filter_map(|(p, q, fp, fq)| {
            let mut local = probes.clone();
            local[base] = fp.clone();
            local[base + 1] = fq.clone();
            let ok = family.verify_lso_property(&local, base, base + 1, false).is_some();
            (!ok).then(|| (p.clone(), q.clone()))
        })
        .collect();
    Ok(LsoReport {
        varsigma,
        dim,
        count: family.count(),
        count_constant: OrderingFamily::count_constant(dim),
        pairs,
        grid,
        witnessed: pairs - failures.len(),
        failures,
    })
}

fn lso(a: LsoArgs) -> Result<i32> {
    let seed = seed_or_random(a.seed);
    let report = lso_check(a.varsigma, a.dim, a.pairs, a.grid, seed)?;
    emit(&to_json(&report)?, a.out.as_deref())?;
    Ok(if report.failures.is_empty() { EXIT_OK } else { EXIT_DEFECT })
}

fn experiment(a: ExperimentArgs) -> Result<i32> {
    let spec = ExperimentSpec::load(&a.spec)?;
    let (summary, rows) = run_trials(&spec)?;
    if let Some(csv) = &spec.csv {
        write_csv(csv, &rows)?;
    }
    match a.out.as_ref().or(spec.summary.as_ref()) {
        Some(path) => write_json(path, &Versioned { format: FORMAT, body: &summary })?,
        None => emit(&to_json(&summary)?, None)?,
    }
    Ok(if summary.defect_count > 0 { EXIT_DEFECT } else { EXIT_OK })
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::UndefinedLoss | Error::Json { .. } | Error::Io { .. } => EXIT_INVALID,
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Build(a) => build(a),
        Command::Attack(a) => attack(a),
        Command::Loss(a) => loss(a),
        Command::Path(a) => path(a),
        Command::LsoCheck(a) => lso(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
