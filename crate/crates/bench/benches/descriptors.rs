use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use occkit::{DataDescription, DescriptorKind};
use occkit_bench::{fit_default, workload, QUERIES, SIZES};

const DIM: usize = 8;
const SEED: u64 = 0;

fn construct(c: &mut Criterion) {
    for kind in DescriptorKind::ALL {
        let mut group = c.benchmark_group(format!("fit/{kind}"));
        group.sample_size(10);
        for n in SIZES {
            let (train, _) = workload(n, DIM, SEED);
            group.throughput(Throughput::Elements(n as u64));
            group.bench_with_input(BenchmarkId::from_parameter(n), &train, |b, train| {
                b.iter(|| fit_default(kind, black_box(train), SEED))
            });
        }
        group.finish();
    }
}

fn query(c: &mut Criterion) {
    for kind in DescriptorKind::ALL {
        let mut group = c.benchmark_group(format!("score/{kind}"));
        group.sample_size(10);
        group.throughput(Throughput::Elements(QUERIES as u64));
        for n in SIZES {
            let (train, queries) = workload(n, DIM, SEED);
            let model = fit_default(kind, &train, SEED);
            group.bench_with_input(BenchmarkId::from_parameter(n), &queries, |b, queries| {
                b.iter(|| model.score_all(black_box(queries)).unwrap())
            });
        }
        group.finish();
    }
}

criterion_group!(benches, construct, query);
criterion_main!(benches);
