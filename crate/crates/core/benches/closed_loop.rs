use criterion::{criterion_group, criterion_main, Criterion};
use encounter_core::harness::{run_experiment, Execution, ExperimentConfig, MeshSpec, RenderMode, Scenario};

fn experiment(c: &mut Criterion) {
    let template = Scenario::new(MeshSpec::Platform { length: 0.4 }, 1.0);
    let mut group = c.benchmark_group("experiment_10_trials");
    group.sample_size(10);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let mut cfg = ExperimentConfig::new(vec![0.2, 0.4], 5, RenderMode::Haptic);
        cfg.execution = execution;
        group.bench_function(name, |b| b.iter(|| run_experiment(&template, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, experiment);
criterion_main!(benches);
