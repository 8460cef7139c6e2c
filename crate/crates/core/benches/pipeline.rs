use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use msr_core::dataset::generate;
use msr_core::{run, Execution, GeneratorConfig, RunConfig, RunOptions};

fn bench_pipeline(c: &mut Criterion) {
    let gen_cfg = GeneratorConfig { n_per_modality: 2_000, ..GeneratorConfig::default() };
    let dataset = generate(&gen_cfg, Execution::Parallel).expect("generate");
    let cfg = RunConfig::default();

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::new("generate", format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| generate(&gen_cfg, exec).expect("generate"))
        });
        let opts = RunOptions { exec, ..RunOptions::new(42) };
        group.bench_with_input(BenchmarkId::new("run", format!("{exec:?}")), &opts, |b, opts| {
            b.iter(|| run(&cfg, &dataset, opts).expect("run"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);
