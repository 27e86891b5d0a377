//! Property tests for the invariants of every core module. Each property is
//! checked against a recomputation that does not reuse the code under test.

use std::collections::BTreeSet;

use bipembed_core::embedder::{
    compatibility_report, embed_compatible, ClassGraph, EmbedConfig, HPartition,
};
use bipembed_core::exact::rat_usize;
use bipembed_core::homomorphism::{d_identity_holds, BalanceConfig};
use bipembed_core::instances::{self, patch_min_degree, random_bipartite};
use bipembed_core::partitioner::redistribute_cluster_sizes;
use bipembed_core::regularity::{
    check_regular_pair, maximal_reduced_graph, super_regularize, typical_vertices, CheckConfig,
    Strategy as CheckStrategy,
};
use bipembed_core::{
    balance_assignment, bandwidth_labelling, build_cycle_homomorphism, find_hamilton_cycle,
    partition_pieces, rat, verify_cycle, verify_cycle_homomorphism, verify_embedding,
    BipartiteGraph, ClusterPartition, HamiltonMode, LabellingMode, LinkingPolicy, Rational,
    RegularityParams, Side, Surd, Verdict, VertexId, VertexSet,
};
use num_traits::Signed;
use proptest::prelude::*;

fn exhaustive() -> CheckConfig {
    CheckConfig {
        strategy: CheckStrategy::Exhaustive,
        ..CheckConfig::default()
    }
}

/// Edge count between index lists, by scanning an explicit edge list.
fn count_edges(edges: &BTreeSet<(usize, usize)>, u: &[usize], w: &[usize]) -> usize {
    edges
        .iter()
        .filter(|(a, b)| u.contains(a) && w.contains(b))
        .count()
}

fn edge_set(g: &BipartiteGraph) -> BTreeSet<(usize, usize)> {
    g.edges().collect()
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = (usize, usize, Vec<(usize, usize)>)> {
    (1..=max_n, 1..=max_n).prop_flat_map(|(na, nb)| {
        (
            Just(na),
            Just(nb),
            proptest::collection::vec((0..na, 0..nb), 0..na * nb + 1),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    // ---- graph core -------------------------------------------------------

    #[test]
    fn degree_sums_and_edge_round_trip((na, nb, edges) in arb_graph(12)) {
        let g = BipartiteGraph::new(na, nb, &edges).unwrap();
        let input: BTreeSet<_> = edges.iter().copied().collect();
        prop_assert_eq!(edge_set(&g), input.clone());
        let full_a = VertexSet::full(Side::A, na);
        let full_b = VertexSet::full(Side::B, nb);
        let sum_a: usize = (0..na).map(|a| g.degree_into(VertexId::a(a), &full_b).unwrap()).sum();
        let sum_b: usize = (0..nb).map(|b| g.degree_into(VertexId::b(b), &full_a).unwrap()).sum();
        prop_assert_eq!(sum_a, input.len());
        prop_assert_eq!(sum_b, input.len());
    }

    #[test]
    fn density_times_sizes_is_the_edge_count(
        (na, nb, edges) in arb_graph(10),
        mask_a in any::<u16>(),
        mask_b in any::<u16>(),
    ) {
        let g = BipartiteGraph::new(na, nb, &edges).unwrap();
        let u: Vec<usize> = (0..na).filter(|i| mask_a >> i & 1 == 1).collect();
        let w: Vec<usize> = (0..nb).filter(|i| mask_b >> i & 1 == 1).collect();
        prop_assume!(!u.is_empty() && !w.is_empty());
        let us = VertexSet::from_indices(Side::A, na, u.iter().copied());
        let ws = VertexSet::from_indices(Side::B, nb, w.iter().copied());
        let product = g.density(&us, &ws).unwrap() * rat_usize(u.len() * w.len());
        prop_assert!(product.is_integer());
        prop_assert_eq!(product, rat_usize(count_edges(&edge_set(&g), &u, &w)));
    }

    // ---- regularity -------------------------------------------------------

    #[test]
    fn irregularity_witnesses_are_sound(n in 4usize..9, p in 0.2f64..0.9, seed in any::<u64>(), eps_den in 2i64..5) {
        let g = random_bipartite(n, n, p, seed);
        let eps = rat(1, eps_den);
        let params = RegularityParams::new(eps.clone(), rat(0, 1)).unwrap();
        let (a, b) = (VertexSet::full(Side::A, n), VertexSet::full(Side::B, n));
        let cert = check_regular_pair(&g, &a, &b, &params, &exhaustive()).unwrap();
        if let Some(w) = &cert.witness {
            let edges = edge_set(&g);
            let base = Rational::new((count_edges(&edges, &(0..n).collect::<Vec<_>>(), &(0..n).collect::<Vec<_>>()) as i64).into(), ((n * n) as i64).into());
            let d = Rational::new((count_edges(&edges, &w.a_side, &w.b_side) as i64).into(), ((w.a_side.len() * w.b_side.len()) as i64).into());
            prop_assert!((d - base).abs() > eps);
            prop_assert!(rat_usize(w.a_side.len()) >= &eps * rat_usize(n));
            prop_assert!(rat_usize(w.b_side.len()) >= &eps * rat_usize(n));
        }
    }

    #[test]
    fn exhaustive_regularity_is_monotone_in_epsilon(n in 4usize..8, p in 0.2f64..0.9, seed in any::<u64>(), e1 in 2i64..6, bump in 1i64..4) {
        let g = random_bipartite(n, n, p, seed);
        let (a, b) = (VertexSet::full(Side::A, n), VertexSet::full(Side::B, n));
        let tight = RegularityParams::new(rat(1, e1), rat(0, 1)).unwrap();
        let loose_eps = (rat(1, e1) + rat(bump, 10)).min(rat(1, 1));
        let loose = RegularityParams::new(loose_eps, rat(0, 1)).unwrap();
        let c1 = check_regular_pair(&g, &a, &b, &tight, &exhaustive()).unwrap();
        let c2 = check_regular_pair(&g, &a, &b, &loose, &exhaustive()).unwrap();
        if c1.is_epsilon_regular() {
            prop_assert!(c2.is_epsilon_regular());
        }
    }

    #[test]
    fn few_atypical_vertices_in_regular_pairs(n in 6usize..10, seed in any::<u64>(), mask in any::<u16>()) {
        let g = random_bipartite(n, n, 0.8, seed);
        let params = RegularityParams::new(rat(1, 3), rat(1, 2)).unwrap();
        let (a, b) = (VertexSet::full(Side::A, n), VertexSet::full(Side::B, n));
        let cert = check_regular_pair(&g, &a, &b, &params, &exhaustive()).unwrap();
        prop_assume!(cert.verdict == Verdict::CertifiedRegular);
        let bp = VertexSet::from_indices(Side::B, n, (0..n).filter(|i| mask >> i & 1 == 1));
        prop_assume!(3 * bp.len() >= n);
        let rep = typical_vertices(&g, &a, &b, &bp, &params).unwrap();
        prop_assert!(rep.precondition_met);
        // Independent typicality: at least (d − ε)|B′| neighbours in B′.
        let need = (rat(1, 2) - rat(1, 3)) * rat_usize(bp.len());
        let atypical = (0..n).filter(|&x| rat_usize(g.degree_into(VertexId::a(x), &bp).unwrap()) < need).count();
        prop_assert_eq!(atypical, n - rep.typical.len());
        prop_assert!(3 * atypical <= n);
    }

    // ---- Hamilton cycles --------------------------------------------------

    #[test]
    fn dense_small_graphs_are_hamiltonian(n in 2usize..9, p in 0.3f64..0.9, seed in any::<u64>()) {
        let g = patch_min_degree(&random_bipartite(n, n, p, seed), n / 2 + 1, seed);
        prop_assume!(g.min_degree() > n / 2);
        let ex = find_hamilton_cycle(&g, HamiltonMode::ExhaustiveSmall, seed, None).unwrap();
        prop_assert!(verify_cycle(&g, &ex).is_ok());
        let heur = find_hamilton_cycle(&g, HamiltonMode::RotationExtension, seed, None).unwrap();
        prop_assert!(verify_cycle(&g, &heur).is_ok());
    }

    // ---- homomorphism -----------------------------------------------------

    #[test]
    fn pieces_tile_the_labelling(n in 2usize..60, ell_frac in 0.0f64..1.0) {
        let t = instances::hamilton_cycle(n).unwrap();
        let lab = bandwidth_labelling(&t.graph, LabellingMode::Given, Some(&t.order)).unwrap();
        let ell = 1 + ((2 * n - 1) as f64 * ell_frac) as usize;
        let pieces = partition_pieces(&lab, ell).unwrap();
        let mut at = 0;
        for i in 0..ell {
            prop_assert_eq!(pieces.starts[i], at);
            let block = &lab.order[at..at + pieces.sizes[i]];
            prop_assert_eq!(pieces.x[i], block.iter().filter(|v| v.side == Side::A).count());
            prop_assert_eq!(pieces.y[i], block.iter().filter(|v| v.side == Side::B).count());
            at += pieces.sizes[i];
        }
        prop_assert_eq!(at, 2 * n);
        prop_assert!(pieces.sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(pieces.sizes[0] - pieces.sizes[ell - 1] <= 1);
    }

    #[test]
    fn balancing_maps_respect_the_bound(k in 1usize..6, ell in 4usize..40, seed in any::<u64>(), skew in 0usize..4) {
        let piece = 12;
        let x: Vec<usize> = (0..ell).map(|j| if j % 2 == 0 { piece / 2 + skew } else { piece / 2 - skew }).collect();
        let y: Vec<usize> = x.iter().map(|&a| piece - a).collect();
        let n = piece * ell / 2;
        let mut targets = vec![n / k; k];
        targets[0] += n % k;
        let xi = rat(1, 5);
        let cfg = BalanceConfig::new(xi.clone(), 50, seed);
        if let Ok(b) = balance_assignment(&targets, &x, &y, &cfg) {
            let bound = &xi * rat_usize(n);
            for i in 0..k {
                let a_bar: usize = (0..ell).filter(|&j| b.phi[j] == i).map(|j| x[j]).sum();
                let b_bar: usize = (0..ell).filter(|&j| b.phi[j] == i).map(|j| y[j]).sum();
                prop_assert_eq!(a_bar, b.a_bar[i]);
                prop_assert!(rat_usize(a_bar) < rat_usize(targets[i]) + &bound);
                prop_assert!(rat_usize(b_bar) < rat_usize(targets[i]) + &bound);
            }
            prop_assert!(d_identity_holds(&b, &targets));
        }
    }

    #[test]
    fn cycle_homomorphisms_verify(
        n in 20usize..80,
        window in 1usize..4,
        k in 1usize..5,
        ell in 1usize..4,
        seed in any::<u64>(),
        phis in proptest::collection::vec(0usize..16, 4),
    ) {
        let t = instances::random_local(n, window, 0.6, 4, seed).unwrap();
        let lab = bandwidth_labelling(&t.graph, LabellingMode::Given, Some(&t.order)).unwrap();
        let beta = lab.bandwidth.max(1);
        prop_assume!((2 * k + 1) * beta * ell <= 2 * n);
        let pieces = partition_pieces(&lab, ell).unwrap();
        prop_assume!(pieces.sizes.iter().all(|&s| s >= (2 * k + 1) * beta));
        let phi: Vec<usize> = phis[..ell].iter().map(|p| p % k).collect();
        let hom = build_cycle_homomorphism(&t.graph, &lab, &pieces, &phi, beta, k, LinkingPolicy::Full).unwrap();
        let targets = vec![n.div_ceil(k); k];
        let rep = verify_cycle_homomorphism(&t.graph, &hom, &targets, &rat(1, 1));
        prop_assert!(rep.homomorphism && rep.h2);
        prop_assert_eq!(hom.s.len(), 2 * k * ell * beta);
        // Edge by edge against the cycle C_{2k}: A_i ~ B_i and A_i ~ B_{i+1}.
        for (a, b) in t.graph.edges() {
            let (i, j) = (hom.f_a[a], hom.f_b[b]);
            prop_assert!(i < k && j < k && (j == i || j == (i + 1) % k));
        }
    }

    // ---- embedder ---------------------------------------------------------

    #[test]
    fn compatibility_sets_are_recomputable(n in 6usize..40, k in 1usize..4, seed in any::<u64>(), classes in proptest::collection::vec(0usize..3, 80)) {
        let t = instances::random_local(n, 3, 0.7, 3, seed).unwrap();
        let w = HPartition {
            k,
            class_a: (0..n).map(|i| classes[i] % k).collect(),
            class_b: (0..n).map(|i| classes[40 + i % 40] % k).collect(),
        };
        let sizes = vec![n; k];
        let rep = compatibility_report(&t.graph, &w, &sizes, &sizes, &ClassGraph::cycle(k), &ClassGraph::matching(k), &Surd::from(rat(1, 2)));
        let cls = |v: VertexId| if v.side == Side::A { w.class_a[v.index] } else { w.class_b[v.index] };
        let mut s = BTreeSet::new();
        for (a, b) in t.graph.edges() {
            if cls(VertexId::a(a)) != cls(VertexId::b(b)) {
                s.insert(VertexId::a(a));
                s.insert(VertexId::b(b));
            }
        }
        let mut tt = BTreeSet::new();
        for (a, b) in t.graph.edges() {
            let (x, y) = (VertexId::a(a), VertexId::b(b));
            if s.contains(&x) && !s.contains(&y) { tt.insert(y); }
            if s.contains(&y) && !s.contains(&x) { tt.insert(x); }
        }
        let rep_s: BTreeSet<_> = rep.s.iter().copied().collect();
        let rep_t: BTreeSet<_> = rep.t.iter().copied().collect();
        prop_assert_eq!(rep_s, s);
        prop_assert_eq!(rep_t, tt);
        let ii = t.graph.edges().all(|(a, b)| {
            let (i, j) = (cls(VertexId::a(a)), cls(VertexId::b(b)));
            j == i || j == (i + 1) % k
        });
        prop_assert_eq!(rep.clause_ii, ii);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn super_regularize_leaves_no_low_degree_vertex(seed in any::<u64>(), k in 2usize..4, weakened in 0usize..4) {
        let (g, part) = instances::planted_cycle_pairs(k, 40, 0.7, seed);
        // Strip most edges of a few A-vertices so that some must be removed.
        let edges: Vec<(usize, usize)> = g.edges().filter(|&(a, b)| a >= weakened || b % 8 == 0).collect();
        let g = BipartiteGraph::new(g.size_a(), g.size_b(), &edges).unwrap();
        let params = RegularityParams::new(rat(1, 3), rat(3, 5)).unwrap();
        let cfg = CheckConfig { seed, ..CheckConfig::default() };
        let reduced = maximal_reduced_graph(&g, &part, &params, &cfg).unwrap();
        let r_star: Vec<(usize, usize)> =
            (0..k).flat_map(|i| [(i, i), (i, (i + 1) % k)]).filter(|&(i, j)| reduced.has_edge(i, j)).collect();
        prop_assume!(!r_star.is_empty());
        let weak = RegularityParams::new(rat(1, 2), rat(4, 15)).unwrap();
        let rep = super_regularize(&g, &part, &reduced, &r_star, 2, &weak, 40 * k, &cfg).unwrap();
        let p = &rep.partition;
        let thr = rat(3, 5) - rat(1, 3);
        for &(i, j) in &r_star {
            let (a, b) = (&p.clusters_a[i], &p.clusters_b[j]);
            for x in a.iter() {
                prop_assert!(rat_usize(g.degree_into(VertexId::a(x), b).unwrap()) >= &thr * rat_usize(b.len()));
            }
            for y in b.iter() {
                prop_assert!(rat_usize(g.degree_into(VertexId::b(y), a).unwrap()) >= &thr * rat_usize(a.len()));
            }
        }
        prop_assert!(rep.degree_violations.is_empty());
        for a in 0..weakened.min(40) {
            if r_star.iter().any(|&(i, _)| i == 0) {
                prop_assert!(p.exceptional_a.contains(a));
            }
        }
        prop_assert!(p.validate(g.size_a(), g.size_b()).is_ok());
    }

    #[test]
    fn redistribution_accounting(seed in any::<u64>(), shifts in proptest::collection::vec(-4i64..5, 4)) {
        let (k, m) = (4, 25);
        let (g, part) = instances::planted_cycle_pairs(k, m, 0.8, seed);
        let mut da: Vec<i64> = shifts.clone();
        da[k - 1] -= da.iter().sum::<i64>();
        let db: Vec<i64> = da.iter().rev().copied().collect();
        let xi = rat(1, 10);
        prop_assume!(da.iter().all(|&d| rat_usize(d.unsigned_abs() as usize) <= &xi * rat_usize(k * m)));
        let params = RegularityParams::new(rat(1, 4), rat(1, 2)).unwrap();
        let rep = redistribute_cluster_sizes(&g, &part, &da, &db, &xi, &params, false).unwrap();
        let p = &rep.partition;
        for i in 0..k {
            prop_assert_eq!(p.clusters_a[i].len() as i64, m as i64 + da[i]);
            prop_assert_eq!(p.clusters_b[i].len() as i64, m as i64 + db[i]);
        }
        prop_assert!(p.validate(k * m, k * m).is_ok());
        prop_assert!(rat_usize(rep.iterations.len()) <= rat_usize(k) * &xi * rat_usize(k * m));
        // Replaying each iteration changes exactly one source (−1) and one sink (+1).
        let mut sizes_a = vec![m as i64; k];
        let mut sizes_b = vec![m as i64; k];
        for it in &rep.iterations {
            let sizes = if it.side == Side::A { &mut sizes_a } else { &mut sizes_b };
            let before = sizes.clone();
            for mv in &it.moves {
                sizes[mv.from] -= 1;
                sizes[mv.to] += 1;
            }
            for i in 0..k {
                let expect = before[i] - i64::from(i == it.source) + i64::from(i == it.sink);
                prop_assert_eq!(sizes[i], expect);
            }
        }
    }

    #[test]
    fn planted_matching_embeddings_are_valid_and_spanning(seed in any::<u64>(), k in 1usize..4) {
        let m = 20;
        let (g, part) = instances::planted_cycle_pairs(k, m, 0.6, seed);
        let t = instances::perfect_matching(k * m);
        let w = HPartition { k, class_a: (0..k * m).map(|i| i / m).collect(), class_b: (0..k * m).map(|i| i / m).collect() };
        let rep = compatibility_report(&t.graph, &w, &part.sizes(Side::A), &part.sizes(Side::B), &ClassGraph::cycle(k), &ClassGraph::matching(k), &Surd::from(rat(1, 10)));
        prop_assert!(rep.passed && rep.s.is_empty());
        let out = embed_compatible(&g, &t.graph, &part, &w, &ClassGraph::cycle(k), &ClassGraph::matching(k), &t.order, &EmbedConfig { seed, retries: 20 }).unwrap();
        prop_assert!(verify_embedding(&g, &t.graph, &out.embedding).is_ok());
        let used_a: BTreeSet<_> = out.embedding.map_a.iter().collect();
        let used_b: BTreeSet<_> = out.embedding.map_b.iter().collect();
        prop_assert_eq!(used_a.len(), k * m);
        prop_assert_eq!(used_b.len(), k * m);
        for (i, members) in part.clusters_a.iter().enumerate() {
            for x in 0..k * m {
                if w.class_a[x] == i {
                    prop_assert!(members.contains(out.embedding.map_a[x]));
                }
            }
        }
    }
}

#[test]
fn pipeline_phases_conserve_vertices() {
    let n = 256;
    let g = instances::random_host_min_degree(n, &rat(3, 10), 0.0, 11).unwrap();
    let mut cfg = bipembed_core::EmbedPipelineConfig::practical(rat(3, 10), 11);
    cfg.k0 = 4;
    cfg.kmax = 4;
    let t = instances::hamilton_cycle(n).unwrap();
    let rep = bipembed_core::embed_bipartite(&g, &t.graph, &cfg).unwrap();
    for p in [&rep.phase1.partition, &rep.phase2.partition] {
        assert!(p.validate(n, n).is_ok());
        assert!(p.exceptional_a.is_empty() && p.exceptional_b.is_empty());
        assert_eq!(p.sizes(Side::A).iter().sum::<usize>(), n);
    }
    let check: ClusterPartition = rep.phase2.partition.clone();
    assert_eq!(check.sizes(Side::A), rep.homomorphism.pre_a);
    assert_eq!(check.sizes(Side::B), rep.homomorphism.pre_b);
}
