use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dsmseq_core::solver::{expand_and_prune_chunk, explore, partition_row, Direction};
use dsmseq_core::{generate_instance, solve, BinomialTable, SolverConfig, Variant};

fn rank(c: &mut Criterion) {
    let table = BinomialTable::new(20).unwrap();
    // Every 10-subset of 20 items in a fixed stride.
    let masks: Vec<u64> = (1..=table.get(20, 10))
        .step_by(97)
        .map(|ha| table.unrank_mask(ha, 20, 10))
        .collect();
    c.bench_function("rank_mask n=20 p=10", |b| {
        b.iter(|| masks.iter().map(|&m| table.rank_mask(black_box(m), 20)).sum::<u64>())
    });
}

fn expand_chunk(c: &mut Criterion) {
    let dsm = generate_instance(14, 0.5, 3).unwrap();
    let table = BinomialTable::new(14).unwrap();
    let (row, _) = explore(&dsm, &table, Direction::Forward, 6, 1, Variant::Full).unwrap();
    let chunks = partition_row(&row, 4);
    c.bench_function("expand chunk n=14 row 6 (1/4)", |b| {
        b.iter(|| expand_and_prune_chunk(&dsm, &table, &chunks[0]).unwrap())
    });
}

fn solve_sizes(c: &mut Criterion) {
    let cores = std::thread::available_parallelism().map_or(1, |c| c.get()).min(8);
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for n in [12usize, 14] {
        let dsm = generate_instance(n, 0.5, n as u64).unwrap();
        for variant in Variant::ALL {
            let config = SolverConfig::default().with_cores(cores).with_variant(variant);
            group.bench_with_input(BenchmarkId::new(variant.name(), n), &dsm, |b, dsm| {
                b.iter(|| solve(dsm, &config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, rank, expand_chunk, solve_sizes);
criterion_main!(benches);
