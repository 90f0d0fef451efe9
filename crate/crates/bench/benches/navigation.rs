use criterion::{black_box, criterion_group, criterion_main, Criterion};
use escnav_bench::probe_points;
use escnav_core::scenario::particle_world;
use escnav_core::{NavFunction, SourcePotential, Vec2};

fn navigation(c: &mut Criterion) {
    let world = particle_world(0.0);
    let source = SourcePotential::fixed(Vec2::new(1.0, 1.0), Vec2::ZERO);
    let nav = NavFunction::fully_known(&world, &source, 6);
    let points = probe_points(32);

    c.bench_function("phi/grid", |b| {
        b.iter(|| {
            points
                .iter()
                .map(|&p| nav.phi(black_box(p), 0.0).unwrap())
                .sum::<f64>()
        })
    });
    c.bench_function("grad_phi/grid", |b| {
        b.iter(|| {
            points
                .iter()
                .map(|&p| nav.grad_phi(black_box(p), 0.0).unwrap().x)
                .sum::<f64>()
        })
    });
    c.bench_function("beta_product/all_known", |b| {
        let ids = world.ids();
        b.iter(|| world.beta_product(&ids, black_box(Vec2::new(0.3, 2.1))))
    });
}

criterion_group!(benches, navigation);
criterion_main!(benches);
