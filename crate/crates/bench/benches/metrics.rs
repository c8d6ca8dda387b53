use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvclust::{accuracy, co_association, fmi, nmi};
use mvclust_bench::partition_pair;

fn bench_metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("metrics");
    for k in [10, 100] {
        let (a, b) = partition_pair(10_000, k);
        group.bench_with_input(BenchmarkId::new("nmi", k), &(&a, &b), |bench, (a, b)| {
            bench.iter(|| nmi(black_box(a), black_box(b)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("accuracy", k), &(&a, &b), |bench, (a, b)| {
            bench.iter(|| accuracy(black_box(a), black_box(b)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fmi", k), &(&a, &b), |bench, (a, b)| {
            bench.iter(|| fmi(black_box(a), black_box(b)).unwrap())
        });
    }
    group.finish();
}

fn bench_co_association(c: &mut Criterion) {
    let (a, b) = partition_pair(2000, 20);
    let parts = vec![a, b.clone(), b];
    c.bench_function("co_association/2000x3", |bench| bench.iter(|| co_association(black_box(&parts)).unwrap()));
}

criterion_group!(benches, bench_metrics, bench_co_association);
criterion_main!(benches);
