use criterion::{criterion_group, criterion_main, Criterion};
use d2dmac::scenario::{run_sweep, run_sweep_sequential, ScenarioConfig};

fn bench_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.traffic.loads = vec![2.0, 4.0];
    cfg.run.seeds = (1..=4).collect();
    cfg.frame.sim_seconds = 0.02;
    cfg
}

fn sweep(c: &mut Criterion) {
    let cfg = bench_config();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| run_sweep(&cfg).unwrap()));
    group.bench_function("sequential", |b| b.iter(|| run_sweep_sequential(&cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
