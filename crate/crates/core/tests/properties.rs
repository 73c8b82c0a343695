use std::collections::BTreeSet;

use proptest::prelude::*;

use reliable_spanner::attacks::{generate, AttackKind, AttackMask, AttackSize};
use reliable_spanner::gradation::Gradation;
use reliable_spanner::harness::{run_trials, AttackSpec, Dimension, ExperimentSpec, Regime};
use reliable_spanner::loss::{heuristic_bounds, min_extension};
use reliable_spanner::lso::{FixedPoint, OrderingFamily};
use reliable_spanner::resilience1d::{
    classify_bad, damaged_pairs_1d, find_stairway, Direction, StairwayMode,
};
use reliable_spanner::shadow::{compute_shadow, Alpha};
use reliable_spanner::spanner1d::{LineGraph, Spanner1D};
use reliable_spanner::spannerhd::build_hd_with_family;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn mask_from(n: usize, picks: &[usize]) -> AttackMask {
    AttackMask::from_vertices(n, picks.iter().map(|&p| p % n + 1))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn gradation_nests_and_halves(n in 1usize..700, seed in any::<u64>()) {
        let g = Gradation::build(n, seed).unwrap();
        for i in 0..=g.height() {
            let padded = g.members(i, false).unwrap();
            prop_assert_eq!(padded.len(), g.n_padded() >> i);
            if i < g.height() {
                let next: BTreeSet<_> = g.members(i + 1, false).unwrap().iter().collect();
                let cur: BTreeSet<_> = padded.iter().collect();
                prop_assert!(next.is_subset(&cur));
            }
        }
        prop_assert_eq!(&g, &Gradation::build(n, seed).unwrap());
    }

    #[test]
    fn level_edges_follow_rank_rule(
        n in 2usize..400, seed in any::<u64>(), rho in 0.05f64..0.49, c in 1.0f64..8.0,
        probes in prop::collection::vec((any::<usize>(), any::<usize>()), 20),
    ) {
        let s = Spanner1D::construct(n, rho, None, c, seed).unwrap();
        let top = s.top_level();
        for i in 1..=top {
            prop_assert!(s.conn(i).unwrap() >= s.conn(i - 1).unwrap());
        }
        for (a, b) in probes {
            let (u, v) = (a % n + 1, b % n + 1);
            prop_assert_eq!(s.has_edge(u, v), s.has_edge(v, u));
            for i in 0..=top {
                let members = s.level_members(i);
                let brute = u != v
                    && match (members.iter().position(|&x| x == u), members.iter().position(|&x| x == v)) {
                        (Some(p), Some(q)) => p.abs_diff(q) as u64 <= s.conn(i).unwrap(),
                        _ => false,
                    };
                prop_assert_eq!(s.has_level_edge(i, u, v), brute);
            }
        }
        prop_assert!((s.edge_count().total as f64) <= s.size_bound());
    }

    #[test]
    fn shadows_shrink_as_alpha_grows(
        n in 1usize..300, picks in prop::collection::vec(any::<usize>(), 1..40),
        a in 1u64..63, b in 1u64..63,
    ) {
        let attack: BTreeSet<usize> = picks.iter().map(|&p| p % n + 1).collect();
        let (lo, hi) = (a.min(b), a.max(b));
        let small = compute_shadow(&attack, Alpha::from_ratio(lo, 64).unwrap(), n).unwrap();
        let large = compute_shadow(&attack, Alpha::from_ratio(hi, 64).unwrap(), n).unwrap();
        prop_assert!(large.combined.is_subset(&small.combined));
    }

    #[test]
    fn stairways_satisfy_their_definition(
        n in 16usize..300, seed in any::<u64>(), rho in 0.2f64..0.49,
        picks in prop::collection::vec(any::<usize>(), 1..30),
    ) {
        let s = Spanner1D::construct(n, rho, None, 1.0, seed).unwrap();
        let attack = mask_from(n, &picks);
        let g = s.gradation();
        for v in (1..=n).filter(|&v| !attack.contains(v)) {
            for dir in [Direction::Left, Direction::Right] {
                let Some(st) = find_stairway(&s, &attack, v, dir, StairwayMode::Exhaustive).unwrap() else {
                    continue;
                };
                prop_assert!(st.safe && st.usable);
                prop_assert_eq!(st.points[0], v);
                for (i, &p) in st.points.iter().enumerate() {
                    prop_assert!(g.level_of(p) >= i);
                    prop_assert!(!attack.contains(p));
                }
                for (i, w) in st.points.windows(2).enumerate() {
                    match dir {
                        Direction::Right => prop_assert!(w[0] <= w[1]),
                        Direction::Left => prop_assert!(w[0] >= w[1]),
                    }
                    prop_assert!(w[0] == w[1] || s.has_level_edge(i, w[0], w[1]));
                }
                let top = st.top();
                let last = st.last();
                let (lo, hi) = match dir {
                    Direction::Right => (last, n),
                    Direction::Left => (1, last),
                };
                let side: Vec<usize> = (lo..=hi).filter(|&x| g.level_of(x) >= top).collect();
                for (k, &x) in side.iter().enumerate() {
                    for &y in &side[k + 1..] {
                        prop_assert!(s.has_edge(x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn damaged_pairs_touch_bad_points(
        n in 16usize..300, seed in any::<u64>(), rho in 0.2f64..0.49,
        picks in prop::collection::vec(any::<usize>(), 1..40),
    ) {
        let s = Spanner1D::construct(n, rho, None, 1.0, seed).unwrap();
        let attack = mask_from(n, &picks);
        let bad = classify_bad(&s, &attack);
        for (u, v) in damaged_pairs_1d(&s, &attack) {
            prop_assert!(bad.bad[u - 1] || bad.bad[v - 1]);
        }
    }

    #[test]
    fn extension_covers_and_is_monotone(
        edges in prop::collection::vec((1usize..30, 1usize..30), 1..60),
        extra in prop::collection::vec((1usize..30, 1usize..30), 1..10),
    ) {
        let pairs: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| a != b).collect();
        prop_assume!(!pairs.is_empty());
        let ext = min_extension(&pairs);
        prop_assert!(pairs.iter().all(|(a, b)| ext.witness.contains(a) || ext.witness.contains(b)));
        let (lo, hi) = heuristic_bounds(&pairs);
        prop_assert!(lo <= ext.lower && ext.upper <= hi);
        let mut more = pairs.clone();
        more.extend(extra.into_iter().filter(|(a, b)| a != b));
        prop_assert!(min_extension(&more).lower >= ext.lower);
    }

    #[test]
    fn comparator_matches_key_sort(
        coords in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..40),
        index in any::<u64>(),
    ) {
        let family = OrderingFamily::build(0.25, 2).unwrap();
        let o = family.get(index % family.count());
        let mut pts: Vec<FixedPoint> = coords.iter().map(|&(x, y)| FixedPoint::from_unit(&[x, y]).unwrap()).collect();
        pts.sort_by(|a, b| a.0.cmp(&b.0));
        pts.dedup();
        let mut by_cmp = pts.clone();
        by_cmp.sort_by(|a, b| family.compare(&o, a, b).unwrap());
        let mut by_key = pts;
        by_key.sort_by_key(|p| family.key(&o, p));
        prop_assert_eq!(by_cmp, by_key);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn hd_paths_remeasure_and_bad_sets_nest(
        n in 32usize..160, seed in any::<u64>(), k in 1usize..16,
    ) {
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 + ((i * 37) % 5) as f64 * 0.1]).collect();
        let s = build_hd_with_family(pts, OrderingFamily::identity(1), 0.5, 0.45, None, 1.0, seed).unwrap();
        let attack = generate(AttackKind::Uniform, n, AttackSize::Count(k), 0, seed).unwrap().mask();
        let seq = s.bad_sequence(&attack);
        for w in seq.windows(2) {
            prop_assert!((1..=n).all(|v| !w[0].contains(v) || w[1].contains(v)));
        }
        let last = seq.last().unwrap();
        for (p, q) in s.damaged_pairs_hd(&attack) {
            prop_assert!(last.contains(p) || last.contains(q));
        }
        let outside: Vec<usize> = (1..=n).filter(|&v| !last.contains(v)).collect();
        for pair in outside.windows(2).step_by(7) {
            let path = s.path_hd(&seq, pair[0], pair[1]).unwrap().unwrap();
            prop_assert!(path.defects.is_empty(), "{:?}", path.defects);
            let len: f64 = path.vertices.windows(2).map(|w| s.dist(w[0], w[1])).sum();
            prop_assert!((len - path.length).abs() <= 1e-12 * len.max(1.0));
            prop_assert!(path.vertices.windows(2).all(|w| s.has_edge(w[0], w[1])));
        }
    }
}

#[test]
fn experiments_reproduce_exactly() {
    let spec = ExperimentSpec {
        variant: Dimension::Line,
        regime: Regime::Empirical,
        n: 300,
        dim: None,
        rho: 0.4,
        delta: None,
        eps: None,
        c_const: 1.0,
        attack: AttackSpec {
            kind: AttackKind::Multiblock,
            size: AttackSize::Fraction(0.1),
            runs: 3,
            seed: 5,
        },
        trials: 16,
        seed: 77,
        csv: None,
        summary: None,
    };
    let (a, rows_a) = run_trials(&spec).unwrap();
    let (b, rows_b) = run_trials(&spec).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(rows_a, rows_b);
    assert!(rows_a.iter().all(|r| r.attack_size == rows_a[0].attack_size));
}
