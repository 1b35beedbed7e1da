use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qwalk_core::cert::{count_c4_labelled, discrepancy_sampled, trace_p4, SampleOptions};
use qwalk_core::graph::gen_gnp;
use qwalk_core::tree::{decompose_tree, gen_random_tree, random_homomorphism};
use qwalk_core::walk::{list_subgraph, run_walk, walk_subgraph, ListModel};

fn generators(c: &mut Criterion) {
    let mut group = c.benchmark_group("gen_gnp");
    for n in [500usize, 2000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| gen_gnp(black_box(n), 0.5, 7).unwrap())
        });
    }
    group.finish();
}

fn walks(c: &mut Criterion) {
    let g = gen_gnp(1000, 0.5, 1).unwrap();
    let steps = 500_000;
    c.bench_function("walk_1000_halfn2", |b| {
        b.iter(|| {
            let mut model = ListModel::new(black_box(3), g.n());
            let trace = run_walk(&g, &mut model, 0, steps).unwrap();
            walk_subgraph(&g, &trace).len()
        })
    });
    c.bench_function("list_subgraph_1000", |b| {
        b.iter(|| list_subgraph(&g, black_box(3), 0.5).unwrap().len())
    });
}

fn certification(c: &mut Criterion) {
    let g = gen_gnp(500, 0.5, 1).unwrap();
    c.bench_function("trace_p4_500", |b| {
        b.iter(|| trace_p4(black_box(&g)).unwrap())
    });
    c.bench_function("c4_count_500", |b| {
        b.iter(|| count_c4_labelled(black_box(&g)))
    });
    let mut group = c.benchmark_group("discrepancy_sampled_500");
    for rounds in [0u32, 3] {
        group.bench_with_input(BenchmarkId::new("refine", rounds), &rounds, |b, &r| {
            b.iter(|| {
                discrepancy_sampled(&g, 0.05, SampleOptions::new(200, 1).with_refinement(r))
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn trees(c: &mut Criterion) {
    let g = gen_gnp(1000, 0.5, 1).unwrap();
    let t = gen_random_tree(300_001, 4, 2).unwrap();
    c.bench_function("tree_homomorphism_300k", |b| {
        b.iter(|| {
            let mut model = ListModel::new(black_box(5), g.n());
            random_homomorphism(&g, &t, &mut model, 0).unwrap()
        })
    });
    c.bench_function("decompose_300k_l48", |b| {
        b.iter(|| decompose_tree(black_box(&t), 48).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = generators, walks, certification, trees
}
criterion_main!(benches);
