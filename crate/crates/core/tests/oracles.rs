//! Cross-checks against independent brute-force and dense linear-algebra oracles.

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use qwalk_core::cert::{pair_deviation, SampleOptions};
use qwalk_core::graph::{gen_complete, gen_cycle, VertexSet};
use qwalk_core::walk::edge_retention_probability;
use qwalk_core::*;

fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    gen_gnp(n, p, seed).unwrap()
}

/// Max normalized deviation by enumerating every pair of qualifying masks.
fn brute_discrepancy(g: &Graph, eps: f64) -> f64 {
    let n = g.n();
    let rho = density(g).unwrap();
    let min = (eps * n as f64 - 1e-9).ceil() as u32;
    let mut best = 0.0f64;
    for a in 1u32..(1 << n) {
        if a.count_ones() < min {
            continue;
        }
        let sa = VertexSet::from_mask(n, a as u64);
        for b in 1u32..(1 << n) {
            if b.count_ones() < min {
                continue;
            }
            let sb = VertexSet::from_mask(n, b as u64);
            let e = edges_between(g, &sa, &sb) as f64;
            let ab = (a.count_ones() * b.count_ones()) as f64;
            best = best.max((e - rho * ab).abs() / ab);
        }
    }
    best
}

/// Ordered 4-tuples (a, b, c, d) of distinct vertices forming a closed cycle.
fn brute_c4(g: &Graph) -> u64 {
    let n = g.n();
    let mut count = 0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let distinct = a != b && a != c && a != d && b != c && b != d && c != d;
                    if distinct
                        && g.has_edge(a, b)
                        && g.has_edge(b, c)
                        && g.has_edge(c, d)
                        && g.has_edge(d, a)
                    {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

fn walk_matrix_eigenvalues(g: &Graph) -> Vec<f64> {
    let n = g.n();
    // D^{-1/2} A D^{-1/2} is similar to P and symmetric.
    let m = DMatrix::from_fn(n, n, |i, j| {
        if g.has_edge(i, j) {
            1.0 / ((g.degree(i) * g.degree(j)) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev
}

fn small_graphs(count: u64, max_n: usize, seed: u64) -> Vec<Graph> {
    (0..count)
        .map(|i| {
            let n = 4 + (i as usize % (max_n - 3));
            let p = 0.3 + 0.5 * ((i * 37 % 11) as f64 / 10.0);
            random_graph(n, p.min(0.95), seed + i)
        })
        .collect()
}

#[test]
fn exhaustive_discrepancy_matches_brute_force() {
    let c5 = gen_cycle(5).unwrap();
    let d = discrepancy_exhaustive(&c5, 0.2).unwrap();
    assert_eq!(d.value, brute_discrepancy(&c5, 0.2));

    for g in small_graphs(25, 8, 100) {
        if g.edge_count() == 0 {
            continue;
        }
        for eps in [0.25, 0.5] {
            let fast = discrepancy_exhaustive(&g, eps).unwrap();
            let slow = brute_discrepancy(&g, eps);
            assert!((fast.value - slow).abs() < 1e-12, "n={} eps={eps}", g.n());
            let again = pair_deviation(&g, &fast.witness.0, &fast.witness.1).unwrap();
            assert!((again - fast.value).abs() < 1e-12);
        }
    }
}

#[test]
fn c4_matches_tuple_enumeration() {
    for g in small_graphs(30, 8, 200) {
        assert_eq!(count_c4_labelled(&g), brute_c4(&g));
    }
    assert_eq!(
        count_c4_labelled(&gen_complete(5)),
        brute_c4(&gen_complete(5))
    );
}

#[test]
fn trace_matches_dense_spectrum() {
    for g in small_graphs(40, 10, 300) {
        if g.min_degree() == 0 {
            continue;
        }
        let fourth: f64 = walk_matrix_eigenvalues(&g).iter().map(|l| l.powi(4)).sum();
        assert!((trace_p4(&g).unwrap() - fourth).abs() < 1e-9);
    }
}

#[test]
fn lambda_estimate_matches_dense_spectrum_and_bound() {
    let mut checked = 0;
    for g in small_graphs(60, 10, 400) {
        let (connected, bipartite) = g.connectivity();
        if !connected || bipartite {
            continue;
        }
        let ev = walk_matrix_eigenvalues(&g);
        let lambda = ev[1].abs().max(ev[ev.len() - 1].abs());
        let est = lambda_estimate(&g, 1e-10, 200_000).unwrap();
        assert!((est - lambda).abs() < 1e-7, "est {est} vs {lambda}");
        let bound = lambda_bound_from_trace(&g);
        assert!(bound.lambda_bound >= est - 1e-8);
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn k_n_walk_law_is_uniform_over_non_stuttering_sequences() {
    // n = 4, l = 3 from start 0: 27 equally likely sequences.
    let g = gen_complete(4);
    let trials = 1_000_000u64;
    let mut counts = std::collections::HashMap::new();
    for t in 0..trials {
        let mut m = ListModel::new(qwalk_core::rng::trial_seed(77, t), 4);
        let w = run_walk(&g, &mut m, 0, 3).unwrap();
        *counts.entry(w.sequence).or_insert(0u64) += 1;
    }
    assert_eq!(counts.len(), 27);
    let expected = trials as f64 / 27.0;
    let chi2: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 0.999 quantile of chi-square with 26 degrees of freedom.
    assert!(chi2 < 54.052, "chi2 = {chi2}");
}

#[test]
fn edge_retention_matches_closed_form_on_small_degrees() {
    // Host K_6: d = 5, α = 0.8 → 4 entries per side.
    let g = gen_complete(6);
    let p = edge_retention_probability(0.8, 5, 5);
    assert!((p - (1.0 - 0.8f64.powi(8))).abs() < 1e-15);
    let trials = 100_000u64;
    let hits = (0..trials)
        .filter(|&t| qwalk_core::walk::edge_retained(&g, t, 0.8, 2, 3))
        .count() as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((hits / trials as f64 - p).abs() < 3.0 * se);
}

#[test]
fn star_tree_occupancy_matches_closed_form() {
    let n = 30usize;
    let m = 20usize;
    let g = gen_complete(n);
    let t = gen_nary_tree(m, 1);
    let trials = 20_000u64;
    let samples: Vec<f64> = (0..trials)
        .map(|s| {
            let h = random_homomorphism(&g, &t, &mut ListModel::new(s, n), 0).unwrap();
            let distinct: std::collections::HashSet<u32> = h.image[1..].iter().copied().collect();
            distinct.len() as f64
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let expected = (n - 1) as f64 * (1.0 - (1.0 - 1.0 / (n - 1) as f64).powi(m as i32));
    assert!((mean - expected).abs() < 3.0 * (var / trials as f64).sqrt());
}

#[test]
fn sampled_with_full_budget_is_exact() {
    for g in small_graphs(10, 8, 500) {
        if g.edge_count() == 0 {
            continue;
        }
        let ex = discrepancy_exhaustive(&g, 0.3).unwrap();
        let sa = discrepancy_sampled(&g, 0.3, SampleOptions::new(u64::MAX, 1)).unwrap();
        assert_eq!(ex.value, sa.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_never_exceeds_exhaustive(
        n in 4usize..=12, p in 0.1f64..0.9, gseed in any::<u64>(),
        trials in 1u64..300, seed in any::<u64>(), refine in 0u32..3,
    ) {
        let g = random_graph(n, p, gseed);
        prop_assume!(g.edge_count() > 0);
        let eps = 0.25;
        let ex = discrepancy_exhaustive(&g, eps).unwrap();
        let opts = SampleOptions::new(trials, seed).with_refinement(refine);
        let sa = discrepancy_sampled(&g, eps, opts).unwrap();
        prop_assert!(sa.value <= ex.value);
        let again = pair_deviation(&g, &sa.witness.0, &sa.witness.1).unwrap();
        prop_assert!((again - sa.value).abs() < 1e-12);
    }

    #[test]
    fn edges_between_identities(
        n in 2usize..40, p in 0.0f64..1.0, gseed in any::<u64>(),
        amask in any::<u64>(), bmask in any::<u64>(),
    ) {
        let g = random_graph(n, p, gseed);
        let a = VertexSet::from_mask(n, amask);
        let b = VertexSet::from_mask(n, bmask);
        prop_assert_eq!(edges_between(&g, &a, &b), edges_between(&g, &b, &a));
        let all = VertexSet::full(n);
        let deg_sum: u64 = a.iter().map(|v| g.degree(v) as u64).sum();
        prop_assert_eq!(edges_between(&g, &a, &all), deg_sum);
        let c = a.complement();
        let crossing = g.edges().filter(|&(u, v)| a.contains(u) != a.contains(v)).count() as u64;
        prop_assert_eq!(edges_between(&g, &a, &c), crossing);
        let degree_total: usize = g.degrees().iter().sum();
        prop_assert_eq!(degree_total as u64, 2 * g.edge_count());
    }

    #[test]
    fn coupling_sandwich_holds(
        n in 5usize..60, p in 0.2f64..1.0, gseed in any::<u64>(),
        seed in any::<u64>(), steps in 0usize..3000,
    ) {
        let g = random_graph(n, p, gseed);
        prop_assume!(g.is_connected());
        let mut model = ListModel::new(seed, n);
        let trace = run_walk(&g, &mut model, 0, steps).unwrap();
        let gw = walk_subgraph(&g, &trace);
        let (lo, hi) = sandwich_bounds(&g, &trace);
        let below = list_subgraph(&g, seed, lo).unwrap();
        let above = list_subgraph(&g, seed, hi).unwrap();
        prop_assert!(below.is_subset(&gw));
        prop_assert!(gw.is_subset(&above));
        prop_assert_eq!(trace.visit_counts.iter().sum::<u64>(), steps as u64);
        prop_assert_eq!(model.consumed_all(), &trace.visit_counts[..]);
    }

    #[test]
    fn decomposition_invariants(size in 2usize..200, max_deg in 2usize..8, seed in any::<u64>(), lraw in any::<usize>()) {
        let t = gen_random_tree(size, max_deg, seed).unwrap();
        let l = 1 + lraw % t.edge_count();
        let d = decompose_tree(&t, l).unwrap();
        let problems = qwalk_core::tree::check_decomposition(&t, l, &d);
        prop_assert!(problems.is_empty(), "{:?}", problems);
    }

    #[test]
    fn tree_visits_are_conserved(size in 1usize..300, max_deg in 2usize..6, seed in any::<u64>()) {
        let g = random_graph(30, 0.4, 9);
        prop_assume!(g.degree(0) > 0 && g.is_connected());
        let t = gen_random_tree(size, max_deg, seed).unwrap();
        let h = random_homomorphism(&g, &t, &mut ListModel::new(seed, 30), 0).unwrap();
        prop_assert!(h.is_valid(&g, &t));
        let visits = tree_visit_counts(&g, &t, &h);
        prop_assert_eq!(visits.iter().sum::<u64>(), t.edge_count() as u64);
        prop_assert!(image_subgraph(&g, &t, &h).len() <= t.edge_count());
    }

    #[test]
    fn balanced_profile_recomputes(n in 2usize..80, p in 0.0f64..1.0, gseed in any::<u64>(), eps in 0.01f64..0.99) {
        let g = random_graph(n, p, gseed);
        let a = balanced_vertices(&g, eps).unwrap();
        let b = balanced_vertices(&g, eps).unwrap();
        prop_assert_eq!(&a, &b);
        let rho = density(&g).unwrap();
        for v in 0..n {
            let diff = (g.degree(v) as f64 - rho * n as f64).abs();
            let margin = 1e-6 * n as f64;
            if diff < eps * n as f64 - margin { prop_assert!(a.balanced.contains(v)); }
            if diff > eps * n as f64 + margin { prop_assert!(!a.balanced.contains(v)); }
        }
    }
}
