//! Shared fixtures for the criterion benchmarks.

use escnav_core::scenario;
use escnav_core::{Scenario, Vec2};

/// The static particle scenario shortened to `duration` seconds.
pub fn short_static(duration: f64) -> Scenario {
    let mut s = scenario::particle_static();
    s.duration = duration;
    s
}

/// Deterministic grid of points spread over the particle workspace.
pub fn probe_points(n: usize) -> Vec<Vec2> {
    let world = scenario::particle_world(0.0);
    (0..n * n)
        .map(|i| {
            let (ix, iy) = (i % n, i / n);
            Vec2::new(
                -2.9 + 5.8 * ix as f64 / (n - 1).max(1) as f64,
                -2.9 + 5.8 * iy as f64 / (n - 1).max(1) as f64,
            )
        })
        .filter(|&p| world.in_inflated_free_space(p))
        .collect()
}
