use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ipso_core::enumeration::{dp_counts, enumerate_pairs, sample_pairs};
use ipso_core::serp::compare;
use ipso_core::Serp;

fn bench_enumerate(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_pairs");
    group.sample_size(10);
    for k in [8, 10, 12] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| enumerate_pairs(black_box(k)).unwrap())
        });
    }
    group.finish();
}

fn bench_dp(c: &mut Criterion) {
    c.bench_function("dp_counts/31", |b| b.iter(|| dp_counts(black_box(31)).unwrap()));
}

fn bench_compare(c: &mut Criterion) {
    let mut group = c.benchmark_group("compare");
    for k in [10, 100, 1000] {
        let s1 = Serp::from_bools((0..k).map(|i| i % 3 == 0));
        let s2 = Serp::from_bools((0..k).map(|i| i % 3 == 1));
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| compare(black_box(&s1), black_box(&s2), k).unwrap())
        });
    }
    group.finish();
}

fn bench_sample(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_pairs");
    group.sample_size(10);
    for k in [20, 100] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| sample_pairs(k, black_box(100_000), 7).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_enumerate, bench_dp, bench_compare, bench_sample);
criterion_main!(benches);
