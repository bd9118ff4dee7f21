use std::hint::black_box;

use adia_core::sweep::{run_sweep, RunConfig};
use adia_core::Execution;
use criterion::{criterion_group, criterion_main, Criterion};

fn sweep(c: &mut Criterion) {
    let text = "n = [8, 16, 32]\nschedule = \"linear\"\nt-min = 50.0\nt-max = 2000.0\nt-count = 8\n";
    let mut config = RunConfig::from_toml_str(text).unwrap().resolve().unwrap();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel(0))] {
        config.exec = exec;
        group.bench_function(name, |b| b.iter(|| black_box(run_sweep(&config).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
