//! Statistical and structural properties checked against independent
//! oracles, plus property-based invariants.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng as _;
use tempnet_core::assembler::{check_connectivity, wire_intra};
use tempnet_core::lifecycle::{classify_events, LifecycleConfig};
use tempnet_core::pipeline::{self, plan_transition, RunConfig, StepConfig};
use tempnet_core::sequences::{fix_parity, DegreeDraft, MixMode, SamplerConfig};
use tempnet_core::transition::{
    for_each_lattice_point, materialize_flow, seed_pool, taboo_search, vi, FlowMatrix,
};
use tempnet_core::{
    seeded_rng, EventKind, FlowSystem, KernelBasis, NodeId, SearchConfig, ShapeParams, Side, Snapshot,
};

/// Uniform wiring of a sparse sequence against the configuration model
/// baseline `k_i k_j / (S - 1)`, aggregated over degree classes so that
/// every class pair has enough mass to estimate.
#[test]
fn pairing_frequencies_follow_configuration_baseline() {
    const MAX: usize = 8;
    let mut rng = seeded_rng(3);
    let n = 2000;
    let mut d: Vec<u32> = (0..n).map(|_| rng.random_range(1..=MAX as u32)).collect();
    if d.iter().sum::<u32>() % 2 == 1 {
        d[0] += 1;
    }
    let stubs: f64 = d.iter().map(|&x| f64::from(x)).sum();
    let class = |a: usize, b: usize| (d[a].min(d[b]) as usize, d[a].max(d[b]) as usize);
    let mut expected = vec![vec![0f64; MAX + 1]; MAX + 1];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = class(i, j);
            expected[a][b] += f64::from(d[i] * d[j]) / (stubs - 1.0);
        }
    }
    let runs = 200;
    let mut got = vec![vec![0f64; MAX + 1]; MAX + 1];
    for _ in 0..runs {
        let (links, _) = wire_intra(&d, &d, ShapeParams::UNIFORM, 50, &mut rng).unwrap();
        for (x, y) in links {
            let (a, b) = class(x, y);
            got[a][b] += 1.0 / f64::from(runs);
        }
    }
    let mut worst = (0.0f64, 0, 0);
    for a in 1..=MAX {
        for b in a..=MAX {
            let rel = got[a][b] / expected[a][b] - 1.0;
            if rel.abs() > worst.0.abs() {
                worst = (rel, a, b);
            }
        }
    }
    println!("largest relative deviation {:+.4} for degree classes {}x{}", worst.0, worst.1, worst.2);
    assert!(worst.0.abs() <= 0.05, "{worst:?}");
}

/// Connected components of an undirected graph from the multiplicity of the
/// zero eigenvalue of its Laplacian.
fn spectral_components(n: usize, links: &[(usize, usize)]) -> usize {
    let mut l = DMatrix::<f64>::zeros(n, n);
    for &(a, b) in links {
        l[(a, a)] += 1.0;
        l[(b, b)] += 1.0;
        l[(a, b)] -= 1.0;
        l[(b, a)] -= 1.0;
    }
    l.symmetric_eigen().eigenvalues.iter().filter(|v| v.abs() < 1e-8).count()
}

fn induced(s: &Snapshot, c: usize) -> (usize, Vec<(usize, usize)>) {
    let members = &s.communities[c];
    let local = |id: NodeId| members.binary_search(&id).ok();
    let links = s
        .links
        .iter()
        .filter_map(|&(a, b)| Some((local(a)?, local(b)?)))
        .collect();
    (members.len(), links)
}

#[test]
fn connectivity_matches_laplacian_spectrum() {
    let mut checked = 0;
    let mut split = 0;
    for seed in 0..40 {
        let st = StepConfig {
            nodes: Some(50),
            communities: None,
            sizes: SamplerConfig::uniform(5, 25),
            degrees: SamplerConfig::uniform(1, 4).with_mix(0.8, MixMode::Bernoulli),
        };
        let out = pipeline::run(&RunConfig::new(seed, 1, st)).unwrap();
        let s = &out.snapshots[0];
        for c in 0..s.communities.len() {
            let (n, links) = induced(s, c);
            let parts = check_connectivity(s, c);
            assert_eq!(parts, spectral_components(n, &links), "seed {seed} community {c}");
            checked += 1;
            split += usize::from(parts > 1);
        }
    }
    assert!(split > 0 && split < checked, "{split} of {checked} disconnected");
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn sparse_flows_have_low_vi() {
    let sys = FlowSystem::new(vec![10, 8, 6], vec![12, 10, 2]).unwrap();
    let (mut zeros, mut neg_vi) = (Vec::new(), Vec::new());
    let count = for_each_lattice_point(&sys, |cells| {
        let f = FlowMatrix::from_rows(cells.chunks(3).map(<[u64]>::to_vec).collect()).unwrap();
        zeros.push(f.zero_count() as f64);
        neg_vi.push(-vi(&f));
        true
    });
    assert_eq!(count, 279);
    let rho = spearman(&zeros, &neg_vi);
    println!("spearman(zero count, -VI) = {rho:.4}");
    assert!(rho > 0.0);
}

#[test]
fn spearman_oracle() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
}

/// Uniform partner choice on a power-law network of 10^4 nodes has no
/// degree preference.
#[test]
fn uniform_wiring_is_neutral_at_scale() {
    let st = StepConfig {
        nodes: Some(10_000),
        communities: None,
        sizes: SamplerConfig::power_law(1.5, 100, 1000),
        degrees: SamplerConfig::power_law(2.5, 10, 100).with_mix(0.7, MixMode::Fixed),
    };
    let out = pipeline::run(&RunConfig::new(11, 1, st)).unwrap();
    let r = out.report.snapshots[0].assortativity.value;
    println!("assortativity at n = 10^4 with uniform shape: {r:.4}");
    assert!(r.abs() <= 0.05, "{r}");
}

/// About 200 nodes in ten communities regrouping into nine.
#[test]
fn shrinking_community_count_produces_splits_or_merges() {
    let mut found = 0;
    for seed in 0..10 {
        let a = StepConfig {
            nodes: None,
            communities: Some(10),
            sizes: SamplerConfig::uniform(20, 20),
            degrees: SamplerConfig::uniform(3, 8).with_mix(0.8, MixMode::Fixed),
        };
        let b = StepConfig {
            communities: Some(9),
            sizes: SamplerConfig::uniform(21, 24),
            ..a.clone()
        };
        let mut cfg = RunConfig::new(seed, 2, a.clone());
        cfg.step = None;
        cfg.steps = vec![a, b];
        let out = pipeline::run(&cfg).unwrap();
        assert_eq!(out.report.snapshots[0].communities, 10);
        assert_eq!(out.report.snapshots[1].communities, 9);
        let events = &out.report.boundaries[0].events;
        for side in [Side::EndOfT, Side::StartOfT1] {
            let n = out.report.snapshots[usize::from(side == Side::StartOfT1)].communities;
            for c in 0..n {
                assert!(events.iter().any(|e| e.side == side && e.community == c));
            }
        }
        found += usize::from(events.iter().any(|e| {
            matches!(e.kind, EventKind::SplitInto | EventKind::MergedFrom)
        }));
    }
    assert_eq!(found, 10);
}

fn flow_system() -> impl Strategy<Value = FlowSystem> {
    (prop::collection::vec(1u64..12, 1..5), 1usize..5, any::<u64>()).prop_map(|(rows, l, seed)| {
        let total: u64 = rows.iter().sum();
        let l = l.min(total as usize);
        let mut rng = seeded_rng(seed);
        let mut cols = vec![1u64; l];
        for _ in 0..total - l as u64 {
            cols[rng.random_range(0..l)] += 1;
        }
        FlowSystem::new(rows, cols).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn fix_parity_yields_valid_spec(
        pairs in prop::collection::vec((1u32..20, 0.0f64..=1.0), 2..40),
        seed in any::<u64>(),
    ) {
        let total: Vec<u32> = pairs.iter().map(|p| p.0).collect();
        let intra: Vec<u32> = pairs.iter().map(|&(d, f)| (f64::from(d) * f) as u32).collect();
        let draft = DegreeDraft { total: total.clone(), intra: intra.clone() };
        let spec = fix_parity(draft, (1, 20), &mut seeded_rng(seed)).unwrap();
        let changed = |a: &[u32], b: &[u32]| a.iter().zip(b).filter(|(x, y)| x != y).count();
        prop_assert!(changed(spec.total(), &total) <= 1);
        prop_assert!(changed(spec.intra(), &intra) <= 1);
        prop_assert_eq!(spec.total().iter().map(|&x| u64::from(x)).sum::<u64>() % 2, 0);
        prop_assert_eq!(spec.intra().iter().map(|&x| u64::from(x)).sum::<u64>() % 2, 0);
        for (d, e) in spec.pairs() {
            prop_assert!((1..=20).contains(&d) && e <= d);
        }
    }

    #[test]
    fn transition_plan_conserves_nodes(n_t in 0usize..500, n_t1 in 0usize..500, k in 0usize..500) {
        prop_assume!(k <= n_t);
        let p = plan_transition(n_t, n_t1, k).unwrap();
        prop_assert_eq!(p.survivors + p.deaths(), n_t);
        prop_assert_eq!(p.survivors + p.births, n_t1);
        prop_assert!(p.births == 0 || p.random_kills == 0);
    }

    #[test]
    fn kernel_moves_stay_in_the_null_space(sys in flow_system()) {
        let a = sys.incidence();
        let basis = KernelBasis::for_system(&sys);
        prop_assert_eq!(basis.len(), (sys.k() - 1) * (sys.l() - 1));
        for m in 0..basis.len() {
            let v = basis.vector(m);
            for row in &a {
                prop_assert_eq!(row.iter().zip(&v).map(|(x, y)| x * y).sum::<i64>(), 0);
            }
        }
    }

    #[test]
    fn search_is_feasible_and_never_worse(sys in flow_system()) {
        for seed in seed_pool(&sys) {
            prop_assert!(sys.is_feasible(&seed.flow));
            let out = taboo_search(&sys, &seed.flow, &KernelBasis::for_system(&sys), &SearchConfig::default());
            prop_assert!(sys.is_feasible(&out.flow));
            prop_assert!(out.vi <= seed.vi + 1e-12);
            prop_assert!((vi(&out.flow) - out.vi).abs() < 1e-9);
        }
    }

    #[test]
    fn materialized_flow_recounts_to_itself(sys in flow_system(), seed in any::<u64>()) {
        let flow = &seed_pool(&sys)[0].flow;
        let mut next = 0u64;
        let rows: Vec<Vec<NodeId>> = sys
            .rows()
            .iter()
            .map(|&r| (0..r).map(|_| { next += 1; NodeId(next - 1) }).collect())
            .collect();
        let targets = materialize_flow(flow, &rows, None, &mut next, &mut seeded_rng(seed)).unwrap();
        for (i, members) in rows.iter().enumerate() {
            for (j, t) in targets.iter().enumerate() {
                let hit = members.iter().filter(|m| t.binary_search(m).is_ok()).count() as u64;
                prop_assert_eq!(hit, flow.get(i, j));
            }
        }
    }

    #[test]
    fn every_community_gets_an_event(
        cells in prop::collection::vec(prop::collection::vec(0u64..15, 1..5), 1..5),
        extra in prop::collection::vec(0u64..10, 10),
    ) {
        let l = cells.iter().map(Vec::len).min().unwrap();
        let rows: Vec<Vec<u64>> = cells.iter().map(|r| r[..l].to_vec()).collect();
        let flow = FlowMatrix::from_rows(rows).unwrap();
        let before: Vec<u64> = flow.row_sums().iter().zip(&extra).map(|(s, e)| s + e + 1).collect();
        let after: Vec<u64> = flow.col_sums().iter().zip(extra.iter().rev()).map(|(s, e)| s + e + 1).collect();
        let cfg = LifecycleConfig::default();
        let events = classify_events(&flow, &before, &after, &cfg).unwrap();
        for i in 0..flow.k() {
            prop_assert!(events.iter().any(|e| e.side == Side::EndOfT && e.community == i));
        }
        for j in 0..flow.l() {
            prop_assert!(events.iter().any(|e| e.side == Side::StartOfT1 && e.community == j));
        }
        prop_assert_eq!(&events, &classify_events(&flow, &before, &after, &cfg).unwrap());
    }
}
