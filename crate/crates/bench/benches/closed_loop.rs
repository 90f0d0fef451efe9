use criterion::{criterion_group, criterion_main, Criterion};
use escnav_bench::short_static;
use escnav_core::sim::{run, Integration};

fn closed_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("closed_loop");
    group.sample_size(20);

    let sampled = short_static(5.0);
    group.bench_function("sampled_5s", |b| b.iter(|| run(&sampled).unwrap()));

    let mut continuous = short_static(5.0);
    continuous.integration = Integration::continuous_default(continuous.esc.omega);
    group.bench_function("continuous_5s", |b| b.iter(|| run(&continuous).unwrap()));

    group.finish();
}

criterion_group!(benches, closed_loop);
criterion_main!(benches);
