use bipembed_bench::{alternating_pieces, cycle_target, dense_host, moon_moser_host};
use bipembed_core::homomorphism::{BalanceConfig, LinkingPolicy};
use bipembed_core::regularity::{check_regular_pair, CheckConfig};
use bipembed_core::{
    balance_assignment, bandwidth_labelling, build_cycle_homomorphism, embed_bipartite,
    find_hamilton_cycle, partition_pieces, rat, EmbedPipelineConfig, HamiltonMode, LabellingMode,
    RegularityParams, Side, VertexSet,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_regularity(c: &mut Criterion) {
    let mut group = c.benchmark_group("regular pair check (sampled, 2000)");
    let params = RegularityParams::new(rat(1, 4), rat(3, 10)).unwrap();
    for n in [64, 256, 512] {
        let g = dense_host(n, 1);
        let (a, b) = (VertexSet::full(Side::A, n), VertexSet::full(Side::B, n));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| {
                check_regular_pair(&g, &a, &b, &params, &CheckConfig::sampled(2000, 3)).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_hamilton(c: &mut Criterion) {
    let mut group = c.benchmark_group("rotation-extension");
    for n in [50, 200, 512] {
        let g = moon_moser_host(n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| find_hamilton_cycle(&g, HamiltonMode::RotationExtension, 4, None).unwrap())
        });
    }
    group.finish();
}

fn bench_balance_and_homomorphism(c: &mut Criterion) {
    let (x, y) = alternating_pieces(200, 80);
    let targets = vec![1000; 8];
    c.bench_function("balance k=8 n=8000 l=200", |bch| {
        bch.iter(|| {
            balance_assignment(&targets, &x, &y, &BalanceConfig::new(rat(1, 20), 50, 9)).unwrap()
        })
    });

    let t = cycle_target(4096);
    let lab = bandwidth_labelling(&t.graph, LabellingMode::Given, Some(&t.order)).unwrap();
    let pieces = partition_pieces(&lab, 64).unwrap();
    let phi: Vec<usize> = (0..64).map(|j| (j * 5) % 8).collect();
    c.bench_function("cycle homomorphism C_8192 onto C_16", |bch| {
        bch.iter(|| {
            build_cycle_homomorphism(
                &t.graph,
                &lab,
                &pieces,
                &phi,
                lab.bandwidth,
                8,
                LinkingPolicy::Full,
            )
            .unwrap()
        })
    });
}

fn bench_pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("embed C_2n");
    group.sample_size(10);
    for n in [256, 512] {
        let g = dense_host(n, 0);
        let h = cycle_target(n);
        let mut cfg = EmbedPipelineConfig::practical(rat(3, 10), 0);
        if n < 512 {
            cfg.k0 = 4;
            cfg.kmax = 4;
        }
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| embed_bipartite(&g, &h.graph, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_regularity,
    bench_hamilton,
    bench_balance_and_homomorphism,
    bench_pipeline
);
criterion_main!(benches);
