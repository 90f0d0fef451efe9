use std::collections::BTreeSet;

use escnav_core::oracle::{finite_diff, relative_error, AveragedField};
use escnav_core::potential::rk_value;
use escnav_core::scenario::particle_world;
use escnav_core::{EscParams, NavFunction, SourcePotential, Vec2, World};
use proptest::prelude::*;

fn source() -> SourcePotential {
    SourcePotential::fixed(Vec2::new(1.0, 1.0), Vec2::ZERO)
}

fn point() -> impl Strategy<Value = Vec2> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

/// Free-space points at least `margin` away from every boundary.
fn free_point(world: World, margin: f64) -> impl Strategy<Value = Vec2> {
    point().prop_filter("in free space", move |&p| world.in_free_space(p).clearance > margin)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gradients_match_finite_differences(p in free_point(particle_world(0.0), 0.05).no_shrink(),
                                          k in prop::sample::select(vec![1u32, 3, 6])) {
        let world = particle_world(0.0);
        let src = source();
        let nav = NavFunction::fully_known(&world, &src, k);
        let fd = finite_diff(|x| nav.phi(x, 0.0).unwrap(), p, 1e-5);
        let err = relative_error(nav.grad_phi(p, 0.0).unwrap(), fd, f64::MIN_POSITIVE);
        prop_assert!(err <= 1e-6, "k={k} p={p} err={err}");

        let all = world.ids();
        let fd = finite_diff(|x| world.beta_product(&all, x), p, 1e-5);
        prop_assert!(relative_error(world.grad_beta_product(&all, p), fd, f64::MIN_POSITIVE) <= 1e-6);
    }
}

proptest! {
    #[test]
    fn phi_in_unit_interval(p in point(), k in 1u32..10) {
        let world = particle_world(0.0);
        let src = source();
        let nav = NavFunction::fully_known(&world, &src, k);
        if let Ok(v) = nav.phi(p, 0.0) {
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v == 0.0, p == Vec2::ZERO);
        } else {
            prop_assert!(nav.beta(p) < 0.0);
        }
    }

    #[test]
    fn beta_sign_is_free_space(p in point(), inflation in 0.0..0.1f64) {
        let world = particle_world(inflation);
        let all = world.ids();
        prop_assert_eq!(world.beta_product(&all, p) >= 0.0, world.in_inflated_free_space(p));
    }

    #[test]
    fn product_is_order_independent(p in point(), ids in prop::collection::btree_set(0u32..5, 0..5)) {
        let world = particle_world(0.0);
        let direct = ids.iter().fold(world.beta_workspace(p), |acc, id| acc * world.obstacle(*id).unwrap().beta(p));
        let folded = world.beta_product(&ids, p);
        prop_assert!((direct - folded).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn discovery_is_idempotent(first in prop::collection::btree_set(0u32..5, 0..5),
                               second in prop::collection::btree_set(0u32..5, 0..5)) {
        let world = particle_world(0.0);
        let src = source();
        let nav = NavFunction::discovery(&world, &src, 0.1).discover(&first);
        let again = nav.discover(&first);
        prop_assert_eq!(again.k(), nav.k());
        let both = nav.discover(&second);
        let union: BTreeSet<u32> = first.union(&second).copied().collect();
        prop_assert_eq!(both.known(), &union);
        prop_assert_eq!(both.k() as usize, union.len());
    }

    #[test]
    fn rk_value_bounded(f0 in 0.0..100.0f64, beta in 0.0..1e6f64, k in 1u32..30) {
        let (v, _) = rk_value(f0, beta, k);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn averaged_field_descends(gx in -5.0..5.0f64, gy in -5.0..5.0f64,
                               omega in 1.0..200.0f64, h_ratio in 0.01..0.99f64,
                               alpha in 0.001..0.5f64, gain in 0.1..100.0f64) {
        let params = EscParams::new(omega, alpha, gain, h_ratio * omega, f64::INFINITY);
        let field = AveragedField::new(&params);
        let g = Vec2::new(gx, gy);
        let work = field.phase_rate(g).dot(g);
        let expected = -field.gain * g.norm_squared();
        prop_assert!((work - expected).abs() <= 1e-12 * expected.abs().max(1e-300));
    }
}
