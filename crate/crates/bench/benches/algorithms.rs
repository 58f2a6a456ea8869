use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lcg_bench::{er_dataset, er_graph_with_chi};
use lcg_core::env::{observe, reset};
use lcg_core::policy::{backward, forward, log_softmax_grad};
use lcg_core::verify::realize_osia;
use lcg_core::{
    exact_chromatic, greedy_sli, mds_generator, rank_exact, run_episode, tabucol, verify_scheme,
    EnvConfig, GreedyDefer, LearnedPolicy, PolicyParams,
};
use ndarray::Array2;

fn coloring(c: &mut Criterion) {
    let mut group = c.benchmark_group("coloring");
    for n in [15, 30] {
        let graphs: Vec<_> = er_dataset(n, 0.2, 20, 1).into_iter().map(|r| r.graph).collect();
        group.bench_with_input(BenchmarkId::new("greedy_sli", n), &graphs, |b, gs| {
            b.iter(|| gs.iter().map(|g| greedy_sli(black_box(g)).num_colors()).sum::<u32>())
        });
        group.bench_with_input(BenchmarkId::new("exact_chromatic", n), &graphs, |b, gs| {
            b.iter(|| gs.iter().filter_map(|g| exact_chromatic(black_box(g), 10_000_000).chi()).sum::<u32>())
        });
    }
    let g = er_graph_with_chi(15, 5, 2);
    group.bench_function("tabucol/15", |b| b.iter(|| tabucol(black_box(&g), 5, 1000, 7, 3)));
    group.finish();
}

fn linalg(c: &mut Criterion) {
    let mut group = c.benchmark_group("linalg");
    for k in [6, 10] {
        let fam = mds_generator(k, k - 1, 11).unwrap();
        group.bench_with_input(BenchmarkId::new("rank_exact_mds", k), &fam.vectors, |b, vs| {
            b.iter(|| rank_exact(black_box(vs)).unwrap())
        });
    }
    let g = er_graph_with_chi(15, 5, 2);
    let scheme = realize_osia(&g, &greedy_sli(&g)).unwrap();
    group.bench_function("verify_osia/15", |b| b.iter(|| verify_scheme(black_box(&scheme)).ok));
    group.finish();
}

fn policy(c: &mut Criterion) {
    let mut group = c.benchmark_group("policy");
    let g = er_graph_with_chi(15, 5, 2);
    let cfg = EnvConfig::coloring(5);
    let obs = observe(&reset(&g), &g, &cfg);
    for hidden in [32, 128] {
        let p = PolicyParams::new(5, hidden, 4, 0);
        group.bench_with_input(BenchmarkId::new("forward", hidden), &p, |b, p| {
            b.iter(|| forward(black_box(&obs), p).unwrap().value)
        });
        let f = forward(&obs, &p).unwrap();
        let coeffs = Array2::from_elem(f.probs.raw_dim(), 1.0);
        let d_logits = log_softmax_grad(&f.probs, &coeffs);
        group.bench_with_input(BenchmarkId::new("backward", hidden), &p, |b, p| {
            b.iter(|| backward(p, black_box(&f.cache), &d_logits, 1.0))
        });
    }
    let learned = LearnedPolicy {
        params: PolicyParams::new(5, 128, 4, 0),
    };
    group.bench_function("episode_learned/15", |b| b.iter(|| run_episode(&g, &cfg, &learned, 7).unwrap().steps));
    group.bench_function("episode_greedy/15", |b| {
        b.iter(|| run_episode(&g, &cfg, &GreedyDefer::default(), 7).unwrap().steps)
    });
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = coloring, linalg, policy
}
criterion_main!(benches);
