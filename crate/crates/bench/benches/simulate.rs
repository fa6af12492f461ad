use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use derw_bench::{normalizers, strong};
use derw_core::simulate::PathSimulator;
use derw_core::{run_ensemble, EnsembleConfig, SimBackend};
use std::hint::black_box;

const N: usize = 100_000;

fn single_path(c: &mut Criterion) {
    let params = strong();
    let norm = normalizers(&params, N);
    let sim = PathSimulator::new(&params, &norm, N, &[1_000, 10_000, N]).unwrap();
    let mut group = c.benchmark_group("path");
    group.throughput(Throughput::Elements(N as u64));
    for backend in [SimBackend::StateOnly, SimBackend::MemorySampling] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{backend:?}")), &backend, |b, &backend| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                sim.run(black_box(seed), backend)
            })
        });
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let params = strong();
    let norm = normalizers(&params, 10_000);
    let mut group = c.benchmark_group("ensemble/1000x1e4");
    group.sample_size(10);
    for workers in [1usize, 0] {
        let config = EnsembleConfig {
            n_max: 10_000,
            checkpoints: vec![100, 1_000, 10_000],
            n_paths: 1_000,
            master_seed: 7,
            backend: SimBackend::StateOnly,
            worker_count: workers,
        };
        let label = if workers == 0 { "all-cores".to_string() } else { format!("{workers}-worker") };
        group.bench_function(label, |b| b.iter(|| run_ensemble(&params, &norm, black_box(&config)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, single_path, ensemble);
criterion_main!(benches);
