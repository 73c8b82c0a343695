//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use reliable_spanner::attacks::{generate, remark_middle, AttackKind, AttackMask, AttackSize};
use reliable_spanner::cli::lso_check;
use reliable_spanner::gradation::{Gradation, Vertex};
use reliable_spanner::harness::{random_points, run_trials, AttackSpec, Dimension, ExperimentSpec, Regime};
use reliable_spanner::loss::{heuristic_bounds, loss_1d, min_extension};
use reliable_spanner::lso::{FixedPoint, OrderingFamily};
use reliable_spanner::resilience1d::{classify_bad, monotone_path};
use reliable_spanner::shadow::{compute_shadow, Alpha};
use reliable_spanner::spanner1d::Spanner1D;
use reliable_spanner::spannerhd::build_hd;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Edge relation recomputed from the level map alone.
struct LineOracle {
    n: usize,
    level: Vec<usize>,
    /// `prefix[l][v]`: members of level `l` among `1..=v`.
    prefix: Vec<Vec<u32>>,
    conn: Vec<u64>,
}

impl LineOracle {
    fn new(g: &Gradation, rho: f64, delta: Option<f64>, c_const: f64) -> Self {
        let n = g.n();
        let eps = rho / (c_const * ((1.0 / rho).ln() + delta.map_or(0.0, |d| (1.0 / d).ln())));
        let npad = n.next_power_of_two();
        let height = npad.trailing_zeros() as usize;
        let mut top = 0;
        while top < height && (npad as f64) * eps > 2f64.powf(1.5 * top as f64) {
            top += 1;
        }
        let level: Vec<usize> = g.level_map()[..n].iter().map(|&l| (l as usize).min(top)).collect();
        let prefix = (0..=top)
            .map(|l| {
                let mut p = vec![0u32; n + 1];
                for v in 1..=n {
                    p[v] = p[v - 1] + (level[v - 1] >= l) as u32;
                }
                p
            })
            .collect();
        let conn = (0..=top).map(|i| (2f64.powf(i as f64 / 2.0) / eps).ceil() as u64).collect();
        LineOracle { n, level, prefix, conn }
    }

    fn top(&self) -> usize {
        self.conn.len() - 1
    }

    fn edge(&self, u: Vertex, v: Vertex) -> bool {
        let (u, v) = (u.min(v), u.max(v));
        if u == v {
            return false;
        }
        let l = self.level[u - 1].min(self.level[v - 1]);
        ((self.prefix[l][v] - self.prefix[l][u]) as u64) <= self.conn[l]
    }

    /// Pairs per level with rank gap within reach, by direct scan.
    fn level_pairs(&self, l: usize) -> u64 {
        let members: Vec<usize> = (1..=self.n).filter(|&v| self.level[v - 1] >= l).collect();
        let mut count = 0u64;
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                if (b - a) as u64 > self.conn[l] {
                    break;
                }
                count += 1;
            }
        }
        count
    }

    /// Forward search over increasing vertices avoiding `attack`.
    fn reaches(&self, attack: &AttackMask, u: Vertex, v: Vertex) -> bool {
        let mut seen = vec![false; self.n + 1];
        let mut stack = vec![u];
        seen[u] = true;
        while let Some(x) = stack.pop() {
            if x == v {
                return true;
            }
            for y in x + 1..=v {
                if !seen[y] && !attack.contains(y) && self.edge(x, y) {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }
}

fn c1_gradation_law() -> Outcome {
    let n = 256;
    let seeds = 2000u64;
    let levels = 4;
    let mut hits = vec![vec![0u32; n]; levels + 1];
    for seed in 0..seeds {
        let g = Gradation::build(n, seed).map_err(|e| e.to_string())?;
        for i in 0..=levels {
            let size = (1..=n).filter(|&v| g.level_of(v) >= i).count();
            ensure(size == n >> i, || format!("seed {seed}: |P_{i}| = {size}"))?;
        }
        for v in 1..=n {
            for i in 0..=g.level_of(v).min(levels) {
                hits[i][v - 1] += 1;
            }
        }
    }
    // Per-vertex 3-sigma bands; with 4n tests about 0.27% fall outside by
    // chance, so at most 1% may.
    let mut outside = 0;
    let mut worst = 0f64;
    for i in 1..=levels {
        let p = 0.5f64.powi(i as i32);
        let sigma = (p * (1.0 - p) / seeds as f64).sqrt();
        for v in 0..n {
            let z = (hits[i][v] as f64 / seeds as f64 - p).abs() / sigma;
            worst = worst.max(z);
            if z > 3.0 {
                outside += 1;
            }
        }
    }
    let tests = levels * n;
    ensure(outside * 100 <= tests, || format!("{outside}/{tests} vertex-levels outside 3 sigma"))?;
    Ok(format!("{outside}/{tests} outside 3 sigma, max |z| = {worst:.2}"))
}

fn c2_edge_bound() -> Outcome {
    let cases: Vec<(u32, f64, f64)> = (10..=14)
        .flat_map(|k| [0.1, 0.25, 0.4].into_iter().flat_map(move |r| [(k, r, 2048.0), (k, r, 1.0)]))
        .collect();
    let results: Vec<Result<(f64, bool), String>> = cases
        .par_iter()
        .map(|&(k, rho, c)| {
            let n = 1usize << k;
            let s = Spanner1D::construct(n, rho, None, c, u64::from(k)).map_err(|e| e.to_string())?;
            let oracle = LineOracle::new(s.gradation(), rho, None, c);
            ensure(oracle.top() == s.top_level(), || format!("n={n} rho={rho} c={c}: top level differs"))?;
            let count = s.edge_count();
            let brute: Vec<u64> = (0..=oracle.top()).map(|l| oracle.level_pairs(l)).collect();
            ensure(count.per_level == brute, || {
                format!("n={n} rho={rho} c={c}: closed form {:?} vs scan {brute:?}", count.per_level)
            })?;
            let distinct = s.edges().count() as u64;
            ensure(distinct <= count.total, || format!("n={n}: distinct {distinct} > total"))?;
            let bound = 7.0 * n as f64 / s.params().eps_step;
            ensure((count.total as f64) <= bound, || {
                format!("n={n} rho={rho} c={c}: |E| = {} > {bound}", count.total)
            })?;
            Ok((count.total as f64 / bound, !s.params().degenerate))
        })
        .collect();
    let mut worst = 0f64;
    let mut sparse = 0;
    for r in results {
        let (ratio, nondegenerate) = r?;
        worst = worst.max(ratio);
        sparse += nondegenerate as usize;
    }
    Ok(format!("{} cases ({sparse} non-degenerate), max |E|/(7n/eps) = {worst:.4}", cases.len()))
}

fn brute_shadow_size(b: &BTreeSet<Vertex>, alpha: Alpha, n: usize) -> BTreeSet<Vertex> {
    let mut out = BTreeSet::new();
    for i in 1..=n {
        let mut found = false;
        let mut cnt = 0;
        for j in i..=n {
            cnt += b.contains(&j) as u64;
            found |= alpha.reached_by(cnt, (j - i + 1) as u64);
        }
        let mut cnt = 0;
        for h in (1..=i).rev() {
            cnt += b.contains(&h) as u64;
            found |= alpha.reached_by(cnt, (i - h + 1) as u64);
        }
        if found {
            out.insert(i);
        }
    }
    out
}

fn c3_shadow_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut brute_checked = 0;
    let mut worst_a = 0f64;
    let mut worst_b = 0f64;
    let mut strong = 0;
    for inst in 0..1000 {
        let n = rng.gen_range(1..=512usize);
        let k = rng.gen_range(1..=n.min(64));
        let b: BTreeSet<Vertex> = rand::seq::index::sample(&mut rng, n, k).into_iter().map(|x| x + 1).collect();
        let den = rng.gen_range(2..=64u64);
        let num = rng.gen_range(1..den);
        let alpha = Alpha::from_ratio(num, den).map_err(|e| e.to_string())?;
        let s = compute_shadow(&b, alpha, n).map_err(|e| e.to_string())?;
        let size = s.combined.len() as f64;
        let a = num as f64 / den as f64;
        let bound_a = (1 + 2 * den.div_ceil(num)) as f64 * k as f64;
        ensure(size <= bound_a, || format!("instance {inst}: |S| = {size} > {bound_a}"))?;
        worst_a = worst_a.max(size / bound_a);
        if 3 * num > 2 * den {
            strong += 1;
            let bound_b = k as f64 / (2.0 * a - 1.0);
            ensure(size <= bound_b + 1e-9, || format!("instance {inst}: |S| = {size} > {bound_b}"))?;
            worst_b = worst_b.max(size / bound_b);
        }
        if n <= 256 {
            brute_checked += 1;
            ensure(s.combined == brute_shadow_size(&b, alpha, n), || format!("instance {inst}: shadow differs"))?;
        }
    }
    Ok(format!(
        "1000 instances, {strong} with alpha > 2/3, {brute_checked} brute-forced; max ratios {worst_a:.3}, {worst_b:.3}"
    ))
}

fn c4_monotone_path() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    let mut unreachable_agree = 0;
    let mut attempts = 0;
    while checked < 1000 {
        attempts += 1;
        if attempts > 20_000 {
            return Err(format!("only {checked} instances found"));
        }
        let n = rng.gen_range(64..=512usize);
        let rho = [0.1, 0.2, 0.3, 0.45][rng.gen_range(0..4)];
        let c = [1.0, 2.0, 4.0][rng.gen_range(0..3)];
        let s = Spanner1D::construct(n, rho, None, c, rng.gen()).map_err(|e| e.to_string())?;
        let size = rng.gen_range(1..=n / 8);
        let kind = [AttackKind::Uniform, AttackKind::Block, AttackKind::Periodic][rng.gen_range(0..3)];
        let Ok(attack) = generate(kind, n, AttackSize::Count(size), 2, rng.gen()) else {
            continue;
        };
        let mask = attack.mask();
        let bad = classify_bad(&s, &mask);
        let good: Vec<Vertex> = (1..=n).filter(|&v| bad.in_stairway_set(v) && !mask.contains(v)).collect();
        if good.len() < 2 {
            continue;
        }
        let oracle = LineOracle::new(s.gradation(), rho, None, c);
        let pick: Vec<Vertex> = good.choose_multiple(&mut rng, 2).copied().collect();
        let (u, v) = (pick[0].min(pick[1]), pick[0].max(pick[1]));
        let path = monotone_path(&s, &mask, u, v).map_err(|e| e.to_string())?;
        let Some(path) = path else {
            return Err(format!("n={n} rho={rho} c={c}: no path {u}->{v} between stairway points"));
        };
        let p = &path.vertices;
        ensure(p.first() == Some(&u) && p.last() == Some(&v), || format!("endpoints {p:?}"))?;
        ensure(p.windows(2).all(|w| w[0] < w[1]), || format!("not increasing: {p:?}"))?;
        ensure(p.windows(2).all(|w| oracle.edge(w[0], w[1])), || format!("non-edge step in {p:?}"))?;
        ensure(p.iter().all(|&x| !mask.contains(x)), || format!("attacked vertex in {p:?}"))?;
        let metric: usize = p.windows(2).map(|w| w[1] - w[0]).sum();
        ensure(metric == v - u, || format!("length {metric} != {}", v - u))?;
        ensure(oracle.reaches(&mask, u, v), || format!("oracle disagrees on {u}->{v}"))?;

        // Arbitrary surviving pair: existence must match the oracle.
        let alive: Vec<Vertex> = (1..=n).filter(|&x| !mask.contains(x)).collect();
        let pick: Vec<Vertex> = alive.choose_multiple(&mut rng, 2).copied().collect();
        let (a, b) = (pick[0].min(pick[1]), pick[0].max(pick[1]));
        let found = monotone_path(&s, &mask, a, b).map_err(|e| e.to_string())?.is_some();
        let truth = oracle.reaches(&mask, a, b);
        ensure(found == truth, || format!("pair {a}->{b}: path {found}, oracle {truth}"))?;
        unreachable_agree += !truth as usize;
        checked += 1;
    }
    Ok(format!(
        "1000 stairway pairs plus 1000 arbitrary pairs ({unreachable_agree} unreachable) agree with the oracle"
    ))
}

fn c5_remark_attack() -> Outcome {
    let n = 1usize << 12;
    let rho = 0.25;
    let s = Spanner1D::construct(n, rho, None, 1.0, 5).map_err(|e| e.to_string())?;
    let attack = remark_middle(&s);
    ensure(!attack.oblivious, || "remark attack flagged oblivious".into())?;
    let mask = attack.mask();
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (u, v) in s.edges() {
        if !mask.contains(u) && !mask.contains(v) {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            parent[a] = b;
        }
    }
    let mut sizes = std::collections::BTreeMap::new();
    for v in (1..=n).filter(|&v| !mask.contains(v)) {
        *sizes.entry(find(&mut parent, v)).or_insert(0usize) += 1;
    }
    let eps = s.params().eps_step;
    let floor = n as f64 / 2.0 - 16.0 * (n as f64).cbrt() / eps * (n as f64).log2();
    let big = sizes.values().filter(|&&c| c as f64 >= floor).count();
    ensure(sizes.len() >= 2, || "attack leaves one component".into())?;
    ensure(big >= 2, || format!("{big} components reach {floor:.1}"))?;
    let report = loss_1d(&s, &mask).map_err(|e| e.to_string())?;
    let rate = report.loss_lower();
    ensure(rate >= 10.0 * rho, || format!("loss lower bound {rate:.3} < {}", 10.0 * rho))?;
    let mut largest: Vec<usize> = sizes.values().copied().collect();
    largest.sort_unstable_by(|a, b| b.cmp(a));
    Ok(format!(
        "|B| = {}, components {:?}, loss rate >= {rate:.2} ({:.0}x rho)",
        attack.len(),
        &largest[..largest.len().min(4)],
        rate / rho
    ))
}

fn spec_1d(regime: Regime, rho: f64, delta: Option<f64>, c_const: f64, trials: usize, seed: u64) -> ExperimentSpec {
    let n = 1024;
    ExperimentSpec {
        variant: Dimension::Line,
        regime,
        n,
        dim: None,
        rho,
        delta,
        eps: None,
        c_const,
        attack: AttackSpec {
            kind: AttackKind::Uniform,
            size: AttackSize::Count(n / 4),
            runs: 0,
            seed,
        },
        trials,
        seed,
        csv: None,
        summary: None,
    }
}

fn c6_expectation() -> Outcome {
    let rho = 0.25;
    let (a, _) = run_trials(&spec_1d(Regime::Theoretical, rho, None, 2048.0, 200, 6)).map_err(|e| e.to_string())?;
    let ci = a.mean_loss_ci_upper.ok_or("no loss")?;
    ensure(ci <= rho, || format!("(a) CI upper {ci} > {rho}"))?;
    ensure(a.defect_count == 0, || format!("(a) {} defects", a.defect_count))?;
    // Sparsest admissible graphs, so the curve is not identically zero.
    let rho_b = 0.45;
    let mut curve = Vec::new();
    for c in [1.0, 2.0, 4.0, 8.0] {
        let (s, _) = run_trials(&spec_1d(Regime::Empirical, rho_b, None, c, 200, 6)).map_err(|e| e.to_string())?;
        ensure(s.defect_count == 0, || format!("(b) c={c}: {} defects", s.defect_count))?;
        curve.push((c, s.mean_loss.ok_or("no loss")?));
    }
    let text = curve.iter().map(|(c, m)| format!("c={c}: {m:.4}")).collect::<Vec<_>>().join(", ");
    ensure(curve.windows(2).all(|w| w[1].1 <= w[0].1), || format!("(b) not nonincreasing: {text}"))?;
    Ok(format!("(a) CI upper {ci:.4} <= {rho}; (b) rho={rho_b}: {text}"))
}

fn c7_probabilistic() -> Outcome {
    let rho = 0.25;
    let delta = 0.2;
    let t = 300;
    let (s, _) = run_trials(&spec_1d(Regime::Theoretical, rho, Some(delta), 2048.0, t, 7)).map_err(|e| e.to_string())?;
    let freq = s.tail_freq.ok_or("no loss")?;
    let limit = delta + 3.0 * (delta * (1.0 - delta) / t as f64).sqrt();
    ensure(freq <= limit, || format!("Pr[loss > rho] = {freq} > {limit}"))?;
    Ok(format!("Pr[loss > rho] = {freq:.4} <= {limit:.4}"))
}

fn c8_lso() -> Outcome {
    let mut notes = Vec::new();
    for d in [1usize, 2] {
        for varsigma in [0.25, 0.125] {
            let r = lso_check(varsigma, d, 10_000, 6, 8).map_err(|e| e.to_string())?;
            ensure(r.failures.is_empty(), || {
                format!("d={d} s={varsigma}: {} unwitnessed, e.g. {:?}", r.failures.len(), r.failures[0])
            })?;
            notes.push(format!("d={d} s={varsigma}: {}/{}", r.witnessed, r.pairs));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for d in [1usize, 2] {
        let family = OrderingFamily::build(0.125, d).map_err(|e| e.to_string())?;
        for _ in 0..5000 {
            let o = family.get(rng.gen_range(0..family.count()));
            let pts: Vec<FixedPoint> = (0..3)
                .map(|_| {
                    // Coarse coordinates make shared prefixes and ties likely.
                    let c: Vec<f64> = (0..d).map(|_| rng.gen_range(0..16) as f64 / 16.0 + rng.gen::<f64>() / 64.0).collect();
                    FixedPoint::from_unit(&c).unwrap()
                })
                .collect();
            if pts[0] == pts[1] || pts[1] == pts[2] || pts[0] == pts[2] {
                continue;
            }
            let cmp = |a: usize, b: usize| family.compare(&o, &pts[a], &pts[b]).unwrap();
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                ensure(cmp(a, b) == cmp(b, a).reverse(), || "antisymmetry fails".into())?;
                ensure(cmp(a, b) != Ordering::Equal, || "distinct points compare equal".into())?;
                let keys = family.key(&o, &pts[a]).cmp(&family.key(&o, &pts[b]));
                ensure(keys == cmp(a, b), || "key order disagrees with comparator".into())?;
            }
            for (a, b, c) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
                if cmp(a, b) == Ordering::Less && cmp(b, c) == Ordering::Less {
                    ensure(cmp(a, c) == Ordering::Less, || "transitivity fails".into())?;
                }
            }
        }
    }
    Ok(format!("{}; 10^4 triples obey total-order axioms", notes.join(", ")))
}

/// Dense Dijkstra over `alive` vertices of an `n`-vertex graph.
fn dijkstra(n: usize, edge: &dyn Fn(usize, usize) -> bool, w: &dyn Fn(usize, usize) -> f64, alive: &[bool], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n + 1];
    let mut done = vec![false; n + 1];
    dist[src] = 0.0;
    loop {
        let mut best = None;
        for v in 1..=n {
            if alive[v] && !done[v] && dist[v].is_finite() && best.is_none_or(|b: usize| dist[v] < dist[b]) {
                best = Some(v);
            }
        }
        let Some(x) = best else { break };
        done[x] = true;
        for y in 1..=n {
            if alive[y] && !done[y] && edge(x, y) {
                let nd = dist[x] + w(x, y);
                if nd < dist[y] {
                    dist[y] = nd;
                }
            }
        }
    }
    dist
}

fn c9_hd_stretch() -> Outcome {
    let n = 512;
    let eps = 0.5;
    let points = random_points(n, 2, 9);
    let s = build_hd(points, eps, 0.25, None, 2048.0, 9).map_err(|e| e.to_string())?;
    let tol = 1e-9;
    let edge = |u: usize, v: usize| s.has_edge(u, v);
    let w = |u: usize, v: usize| s.dist(u, v);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let all = vec![true; n + 1];
    let pairs: Vec<(usize, usize)> = (0..1000)
        .map(|_| loop {
            let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
            if a != b {
                break (a, b);
            }
        })
        .collect();
    let worst_free = pairs
        .par_iter()
        .map(|&(a, b)| dijkstra(n, &edge, &w, &all, a)[b] / s.dist(a, b))
        .reduce(|| 0.0, f64::max);
    ensure(worst_free <= (1.0 + eps) * (1.0 + tol), || format!("B empty: stretch {worst_free}"))?;

    let attack = generate(AttackKind::Uniform, n, AttackSize::Count(n / 8), 0, 9).map_err(|e| e.to_string())?;
    let mask = attack.mask();
    let seq = s.bad_sequence(&mask);
    let last = seq.last().unwrap();
    let alive: Vec<bool> = (0..=n).map(|v| v >= 1 && !mask.contains(v)).collect();
    let outside: Vec<usize> = (1..=n).filter(|&v| !last.contains(v)).collect();
    let oracle_damaged: BTreeSet<(usize, usize)> = (1..=n)
        .into_par_iter()
        .filter(|&a| alive[a])
        .flat_map_iter(|a| {
            let d = dijkstra(n, &edge, &w, &alive, a);
            let (s, alive) = (&s, &alive);
            (a + 1..=n)
                .filter(move |&b| alive[b] && d[b] > (1.0 + eps) * s.dist(a, b) * (1.0 + tol))
                .map(move |b| (a, b))
                .collect::<Vec<_>>()
        })
        .collect();
    let defects = oracle_damaged
        .iter()
        .filter(|&&(a, b)| !last.contains(a) && !last.contains(b))
        .count();
    ensure(defects == 0, || format!("{defects} damaged pairs outside B_N"))?;
    let reported: BTreeSet<(usize, usize)> = s.damaged_pairs_hd(&mask).into_iter().collect();
    ensure(reported == oracle_damaged, || {
        format!("damaged pairs: library {} vs oracle {}", reported.len(), oracle_damaged.len())
    })?;
    let mut worst_path = 0f64;
    for _ in 0..200 {
        let pick: Vec<usize> = outside.choose_multiple(&mut rng, 2).copied().collect();
        let p = s.path_hd(&seq, pick[0], pick[1]).map_err(|e| e.to_string())?;
        let p = p.ok_or_else(|| format!("no path {} -> {}", pick[0], pick[1]))?;
        ensure(p.defects.is_empty(), || format!("path defects {:?}", p.defects))?;
        ensure(p.vertices.iter().all(|&v| !mask.contains(v)), || "path through B".into())?;
        worst_path = worst_path.max(p.stretch);
    }
    ensure(worst_path <= (1.0 + eps) * (1.0 + tol), || format!("path stretch {worst_path}"))?;
    Ok(format!(
        "complete = {}, B empty max stretch {worst_free:.4}, |B_N| = {}, 0 defects, path stretch <= {worst_path:.4}",
        s.is_complete(),
        last.count()
    ))
}

fn c10_min_extension() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut loose = 0;
    for g in 0..200 {
        let v = rng.gen_range(2..=16usize);
        let p = rng.gen_range(0.1..0.9);
        let labels: Vec<Vertex> = rand::seq::index::sample(&mut rng, 1000, v).into_iter().map(|x| x + 1).collect();
        let mut local = Vec::new();
        let mut pairs = Vec::new();
        for a in 0..v {
            for b in a + 1..v {
                if rng.gen_bool(p) {
                    local.push((a, b));
                    pairs.push((labels[a], labels[b]));
                }
            }
        }
        if pairs.is_empty() {
            pairs.push((labels[0], labels[1]));
            local.push((0, 1));
        }
        let brute = (0u32..1 << v)
            .filter(|m| local.iter().all(|&(a, b)| m >> a & 1 == 1 || m >> b & 1 == 1))
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap();
        let ext = min_extension(&pairs);
        ensure(ext.exact && ext.lower == brute && ext.upper == brute, || {
            format!("graph {g}: exact {brute}, got [{}, {}]", ext.lower, ext.upper)
        })?;
        ensure(pairs.iter().all(|(a, b)| ext.witness.contains(a) || ext.witness.contains(b)), || {
            format!("graph {g}: witness is not a cover")
        })?;
        ensure(ext.witness.len() == brute, || format!("graph {g}: witness size"))?;
        let (lo, hi) = heuristic_bounds(&pairs);
        ensure(lo <= brute && brute <= hi, || format!("graph {g}: [{lo}, {hi}] misses {brute}"))?;
        loose += (lo < hi) as usize;
    }
    Ok(format!("200 graphs exact; heuristic bounds bracket all ({loose} strictly loose)"))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(Vec<u8>, i32), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rspan"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.stdout, out.status.code().unwrap_or(-1)))
}

fn c11_determinism() -> Outcome {
    let spec = r#"{
  "variant": "1d", "regime": "empirical", "n": 256, "rho": 0.25, "c_const": 2.0,
  "attack": {"kind": "uniform", "size": {"count": 32}, "seed": 4},
  "trials": 8, "seed": 11, "csv": "rows.csv", "summary": "summary.json"
}"#;
    let script: Vec<Vec<&str>> = vec![
        vec!["build", "--n", "512", "--rho", "0.25", "--c-const", "1", "--seed", "7", "--out", "s.json"],
        vec!["build", "--n", "128", "--rho", "0.25", "--c-const", "1", "--seed", "7", "--explicit", "--out", "sx.json"],
        vec!["build", "--n", "64", "--dim", "2", "--eps", "0.5", "--rho", "0.25", "--seed", "7", "--out", "h.json"],
        vec!["build", "--points-file", "pts.txt", "--eps", "0.5", "--rho", "0.25", "--seed", "7", "--out", "hp.json"],
        vec!["attack", "--kind", "uniform", "--n", "512", "--size", "0.1", "--seed", "3", "--out", "a.json"],
        vec!["attack", "--kind", "multiblock", "--n", "512", "--size", "40", "--seed", "3", "--out", "m.json"],
        vec!["attack", "--kind", "remark-middle", "--spanner", "s.json", "--out", "r.json"],
        vec!["attack", "--kind", "uniform", "--n", "64", "--size", "8", "--seed", "3", "--out", "ha.json"],
        vec!["loss", "--spanner", "s.json", "--attack", "a.json", "--out", "l.json"],
        vec!["loss", "--spanner", "s.json", "--attack", "r.json", "--out", "lr.json"],
        vec!["loss", "--spanner", "h.json", "--attack", "ha.json", "--out", "lh.json"],
        vec!["path", "--spanner", "s.json", "--attack", "a.json", "--u", "5", "--v", "400"],
        vec!["path", "--spanner", "h.json", "--attack", "ha.json", "--u", "1", "--v", "9"],
        vec!["lso-check", "--varsigma", "0.25", "--dim", "2", "--pairs", "50", "--seed", "2", "--out", "lso.json"],
        vec!["experiment", "--spec", "exp.json"],
    ];
    let files = [
        "s.json", "sx.json", "h.json", "hp.json", "a.json", "m.json", "r.json", "ha.json", "l.json", "lr.json",
        "lh.json", "lso.json", "rows.csv", "summary.json",
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        std::fs::write(dir.path().join("exp.json"), spec).map_err(|e| e.to_string())?;
        std::fs::write(dir.path().join("pts.txt"), "# x y\n0 0\n1 0.5\n\n0.25 0.75\n0.9 0.1\n").map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for args in &script {
            let (stdout, code) = run_cli(dir.path(), args)?;
            ensure(code == 0, || format!("{args:?} exited {code}"))?;
            outputs.push(stdout);
        }
        for f in files {
            outputs.push(std::fs::read(dir.path().join(f)).map_err(|e| format!("{f}: {e}"))?);
        }
        runs.push(outputs);
    }
    let diffs = runs[0].iter().zip(&runs[1]).filter(|(a, b)| a != b).count();
    ensure(diffs == 0, || format!("{diffs} outputs differ"))?;
    Ok(format!("{} commands, {} files byte-identical", script.len(), files.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("gradation law", c1_gradation_law),
        ("edge-count bound", c2_edge_bound),
        ("shadow size bounds", c3_shadow_bounds),
        ("monotone-path exactness", c4_monotone_path),
        ("remark attack", c5_remark_attack),
        ("expectation reliability", c6_expectation),
        ("probabilistic variant", c7_probabilistic),
        ("LSO property", c8_lso),
        ("HD stretch", c9_hd_stretch),
        ("minimum extension", c10_min_extension),
        ("CLI determinism", c11_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS [{id:>2}] {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{id:>2}] {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
