//! Benchmarks for the hot paths: pair counting, structure learning, and
//! Monte-Carlo evaluation.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use treelearn::{
    chow_liu, count_pairs, generate_hard, tv_mc, HardInstanceConfig,
};

fn bench_counting_and_learning(c: &mut Criterion) {
    let hard = generate_hard(&HardInstanceConfig { n: 100, m: 10_000, seed: 1 });
    let samples = hard.model.sample(2, 10_000);

    c.bench_function("count_pairs n=100 m=10000", |b| {
        b.iter(|| count_pairs(100, black_box(&samples)).unwrap())
    });

    c.bench_function("chow_liu n=100 m=10000", |b| {
        b.iter_batched(
            || samples.clone(),
            |s| chow_liu(100, &s).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn bench_evaluation(c: &mut Criterion) {
    let hard = generate_hard(&HardInstanceConfig { n: 100, m: 10_000, seed: 3 });
    let samples = hard.model.sample(4, 10_000);
    let learned = chow_liu(100, &samples).unwrap().to_tree_model().unwrap();

    c.bench_function("tv_mc n=100 mc=40000", |b| {
        b.iter(|| tv_mc(black_box(&hard.model), black_box(&learned), 5, 40_000).unwrap())
    });
}

criterion_group!(benches, bench_counting_and_learning, bench_evaluation);
criterion_main!(benches);
