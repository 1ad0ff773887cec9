use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use logsym::kernels::KernelFamily;
use logsym::montecarlo::{run_study1, run_study2, Study1Config, Study2Config};
use logsym::parallel::Execution;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn study1(c: &mut Criterion) {
    let mut group = c.benchmark_group("study1_log_t_n200_m50");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = Study1Config::new(KernelFamily::LogT { nu: 3.0 }, 0.25, 200, 50, 1);
        cfg.success_rates = false;
        cfg.execution = exec;
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| run_study1(cfg).unwrap())
        });
    }
    group.finish();
}

fn study2(c: &mut Criterion) {
    let mut group = c.benchmark_group("study2_log_no_n100_m200");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = Study2Config::new(KernelFamily::LogNo, 0.5, 100, 200, 3, 1);
        cfg.deltas = vec![0.0, 2.0];
        cfg.execution = exec;
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| run_study2(cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, study1, study2);
criterion_main!(benches);
