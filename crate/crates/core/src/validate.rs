//! Validation suites: the oracle checks bundled into pass/fail reports.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::batch::{collision_free_threshold, sweep, SweepParam, SweepRow};
use crate::esc::EscParams;
use crate::export::grid;
use crate::oracle::{
    averaged_flow, deviation, deviation_after, finite_diff, gradient_flow, relative_error, repulsion_check,
    AveragedField, DeviationReport,
};
use crate::potential::{NavFunction, SourcePotential};
use crate::scenario::{graze, particle_static, particle_world};
use crate::sim::{run, Integration, Scenario};
use crate::vec2::Vec2;
use crate::world::World;

/// One named pass/fail measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Human-readable acceptance condition.
    pub condition: String,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, passed: bool, condition: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            value,
            condition: condition.into(),
        }
    }

    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check::new(name, value, value <= limit, format!("<= {limit:e}"))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} = {:.6e} ({})", self.name, self.value, self.condition)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gradients,
    Averaging,
    Repulsion,
    Safety,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Gradients, Suite::Averaging, Suite::Repulsion, Suite::Safety];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gradients => "gradients",
            Suite::Averaging => "averaging",
            Suite::Repulsion => "repulsion",
            Suite::Safety => "safety",
        }
    }

    pub fn run(self) -> SuiteReport {
        let start = Instant::now();
        let checks = match self {
            Suite::Gradients => gradient_checks(1000, GRADIENT_SEED),
            Suite::Averaging => averaging_checks(),
            Suite::Repulsion => repulsion_checks(64),
            Suite::Safety => safety_checks(),
        };
        SuiteReport {
            suite: self.name().to_string(),
            passed: checks.iter().all(|c| c.passed),
            seconds: start.elapsed().as_secs_f64(),
            checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownSuite(pub String);

impl fmt::Display for UnknownSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown suite {:?}, expected gradients, averaging, repulsion or safety", self.0)
    }
}

impl std::error::Error for UnknownSuite {}

impl FromStr for Suite {
    type Err = UnknownSuite;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| UnknownSuite(s.to_string()))
    }
}

pub const GRADIENT_SEED: u64 = 0x5eed;
pub const FD_STEP: f64 = 1e-5;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;

fn reference_source() -> SourcePotential {
    SourcePotential::fixed(Vec2::new(1.0, 1.0), Vec2::ZERO)
}

/// `n` points drawn uniformly from the free space of `world`, rejecting only
/// those whose finite-difference stencil would leave it.
pub fn free_space_samples(world: &World, n: usize, seed: u64) -> Vec<Vec2> {
    let (lo, hi) = world.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if world.in_free_space(p).clearance - world.inflation() > 2.0 * FD_STEP {
            out.push(p);
        }
    }
    out
}

/// Analytic gradients of `f0`, the obstacle product and the navigation
/// function against central differences, for `k` in {1, 3, 6}.
pub fn gradient_checks(n: usize, seed: u64) -> Vec<Check> {
    let world = particle_world(0.0);
    let source = reference_source();
    let points = free_space_samples(&world, n, seed);
    let all = world.ids();
    let cond = format!("max relative error <= {GRADIENT_TOLERANCE:e} over {n} points");

    let worst = |f: &dyn Fn(Vec2) -> (Vec2, Vec2)| {
        points.iter().map(|&p| {
            let (analytic, numeric) = f(p);
            relative_error(analytic, numeric, f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
    };

    let mut checks = Vec::new();
    let e = worst(&|p| (source.grad_f0(p, 0.0), finite_diff(|x| source.f0(x, 0.0), p, FD_STEP)));
    checks.push(Check::new("grad_f0", e, e <= GRADIENT_TOLERANCE, &cond));
    let e = worst(&|p| {
        (
            world.grad_beta_product(&all, p),
            finite_diff(|x| world.beta_product(&all, x), p, FD_STEP),
        )
    });
    checks.push(Check::new("grad_beta", e, e <= GRADIENT_TOLERANCE, &cond));
    for k in [1, 3, 6] {
        let nav = NavFunction::fully_known(&world, &source, k);
        let error_at = |p: Vec2, step: f64| {
            relative_error(
                nav.grad_phi(p, 0.0).expect("sample is free"),
                finite_diff(|x| nav.phi(x, 0.0).expect("stencil is free"), p, step),
                f64::MIN_POSITIVE,
            )
        };
        let (e, p) = points
            .iter()
            .map(|&p| (error_at(p, FD_STEP), p))
            .fold((0.0, Vec2::ZERO), |a, b| if b.0 > a.0 { b } else { a });
        checks.push(Check::new(format!("grad_phi_k{k}"), e, e <= GRADIENT_TOLERANCE, &cond));
        // A tenfold smaller step must shrink the worst error about a
        // hundredfold if the residual is truncation rather than a wrong
        // analytic gradient.
        let refined = error_at(p, FD_STEP / 10.0);
        let gain = e / refined;
        checks.push(Check::new(
            format!("grad_phi_k{k}_step_refinement"),
            gain,
            e <= GRADIENT_TOLERANCE || gain >= 50.0,
            "worst-point error shrinks >= 50x for a 10x smaller step",
        ));
    }
    checks
}

/// Range, minimum and boundary value of the `k = 6` navigation function on
/// an `n` by `n` grid of the particle world.
pub fn grid_checks(n: usize) -> Vec<Check> {
    let world = particle_world(0.0);
    let source = reference_source();
    let nav = NavFunction::fully_known(&world, &source, 6);
    let (lo, hi) = world.bounding_box();
    let nodes = grid(lo, hi, n);
    let values: Vec<(Vec2, f64)> = nodes.iter().filter_map(|&p| nav.phi(p, 0.0).ok().map(|v| (p, v))).collect();

    let out_of_range = values.iter().filter(|(_, v)| !(0.0..=1.0).contains(v)).count();
    let mut checks = vec![Check::new(
        "phi_in_unit_interval",
        out_of_range as f64,
        out_of_range == 0 && !values.is_empty(),
        format!("no defined node of {} outside [0, 1]", values.len()),
    )];

    // The grid cell holding the source: its corner nodes carry the grid
    // minimum, and the value at the source inside the cell vanishes.
    let spacing = (hi - lo) / (n - 1) as f64;
    let src = source.position(0.0);
    let ix = ((src.x - lo.x) / spacing.x).floor();
    let iy = ((src.y - lo.y) / spacing.y).floor();
    let corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        .map(|(dx, dy)| lo + Vec2::new((ix + dx) * spacing.x, (iy + dy) * spacing.y));
    let cell_min = corners.iter().filter_map(|&p| nav.phi(p, 0.0).ok()).fold(f64::INFINITY, f64::min);
    let grid_min = values.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    checks.push(Check::new(
        "grid_minimum_in_source_cell",
        cell_min - grid_min,
        cell_min == grid_min,
        "source cell corners hold the grid minimum",
    ));
    let at_source = nav.phi(src, 0.0).unwrap_or(f64::NAN);
    checks.push(Check::new("phi_at_source_cell", at_source, at_source < 1e-9, "< 1e-9"));

    // Points on the boundary, pushed out by a hair so rounding keeps them
    // inside the domain.
    let mut worst = 0.0_f64;
    let mut count = 0;
    for o in world.obstacles() {
        for j in 0..64 {
            let dir = Vec2::from_polar(1.0, std::f64::consts::TAU * j as f64 / 64.0);
            let p = o.center + dir * (o.effective_radius() * (1.0 + 1e-12));
            if let Ok(v) = nav.phi(p, 0.0) {
                worst = worst.max((v - 1.0).abs());
                count += 1;
            }
        }
    }
    for j in 0..64 {
        let dir = Vec2::from_polar(1.0, std::f64::consts::TAU * j as f64 / 64.0);
        let p = world.workspace_center() + dir * (world.workspace_radius() * (1.0 - 1e-12));
        if let Ok(v) = nav.phi(p, 0.0) {
            worst = worst.max((v - 1.0).abs());
            count += 1;
        }
    }
    checks.push(Check::new(
        "phi_on_boundary",
        worst,
        worst <= 1e-6 && count == 6 * 64,
        format!("|phi - 1| <= 1e-6 at {count} of 384 boundary points"),
    ));
    checks
}

/// Simulated horizon of the averaging comparison, seconds.
pub const AVERAGING_HORIZON: f64 = 20.0;

/// Closed-loop (continuous mode) versus averaged-flow deviation for the
/// static particle scenario with the given controller.
pub fn averaging_deviation(base: &Scenario, esc: EscParams, horizon: f64) -> DeviationReport {
    let mut s = base.clone();
    s.esc = esc;
    s.integration = Integration::continuous_default(esc.omega);
    s.duration = horizon;
    let full = run(&s).expect("reference scenario runs");
    let nav = s.full_nav();
    let avg = averaged_flow(&nav, &s.esc, 0.0, s.start, horizon, 1e-3).expect("averaged flow stays free");
    deviation(&full.positions(), &avg, &s.esc).expect("trajectories overlap")
}

/// `(alpha, C, omega)` against `(alpha / 2, C, 2 omega)`, a quarter of epsilon.
pub fn epsilon_scaling(base: &Scenario, horizon: f64) -> (DeviationReport, DeviationReport) {
    let full = base.esc;
    let quarter = EscParams {
        alpha: full.alpha / 2.0,
        omega: full.omega * 2.0,
        sample_rate: full.sample_rate * 2.0,
        ..full
    };
    (
        averaging_deviation(base, full, horizon),
        averaging_deviation(base, quarter, horizon),
    )
}

/// Max deviation of sampled runs at the scenario's tick and at half of it
/// from the continuous run, over the first `horizon` seconds.
pub fn sampling_deviation(base: &Scenario, horizon: f64) -> (f64, f64) {
    let mut c = base.clone();
    c.duration = horizon;
    c.integration = Integration::continuous_default(c.esc.omega);
    let reference = run(&c).expect("reference scenario runs").positions();
    let dev = |rate: f64| {
        let mut s = base.clone();
        s.duration = horizon;
        s.integration = Integration::Sampled;
        s.esc.sample_rate = rate;
        let traj = run(&s).expect("reference scenario runs").positions();
        deviation_after(&traj, &reference, 0.0).expect("trajectories overlap").max_dev
    };
    (dev(base.esc.sample_rate), dev(2.0 * base.esc.sample_rate))
}

pub fn averaging_checks() -> Vec<Check> {
    let base = particle_static();
    let field = AveragedField::new(&base.esc);
    let (full, quarter) = epsilon_scaling(&base, AVERAGING_HORIZON);
    let ratio = full.max_dev / quarter.max_dev;
    let (coarse, fine) = sampling_deviation(&base, 5.0);
    let halving = coarse / fine;
    vec![
        Check::new("averaged_gain", field.gain, (field.gain - 0.007).abs() < 1e-15, "== 0.007"),
        Check::new("averaged_skew", field.skew, field.skew == 0.5, "== 0.5"),
        Check::new("max_dev_eps", full.max_dev, full.max_dev >= full.mean_dev, format!("epsilon {}", full.epsilon)),
        Check::new(
            "max_dev_eps_quarter",
            quarter.max_dev,
            quarter.max_dev >= quarter.mean_dev,
            format!("epsilon {}", quarter.epsilon),
        ),
        Check::new("eps_scaling_ratio", ratio, (2.0..=8.0).contains(&ratio), "in [2, 8]"),
        Check::new(
            "sampled_dt_halving_ratio",
            halving,
            (2.0 / 1.5..=2.0 * 1.5).contains(&halving),
            "in [1.33, 3]",
        ),
    ]
}

pub fn repulsion_checks(n: usize) -> Vec<Check> {
    let world = particle_world(0.0);
    let source = reference_source();
    let nav = NavFunction::fully_known(&world, &source, 6);
    let esc = particle_static().esc;
    let report = repulsion_check(&nav, &esc, 0.0, n).expect("k is positive");
    let min_rate = report.samples.iter().map(|s| s.direct.min(s.closed_form)).fold(f64::INFINITY, f64::min);
    let flipped = EscParams {
        gain: -esc.gain,
        ..esc
    };
    let flipped = repulsion_check(&nav, &flipped, 0.0, n).expect("k is positive");
    let max_flipped = flipped.samples.iter().map(|s| s.direct.max(s.closed_form)).fold(f64::NEG_INFINITY, f64::max);
    let expected = n * world.obstacles().len();
    vec![
        Check::new(
            "samples",
            report.samples.len() as f64,
            report.samples.len() == expected && report.skipped.is_empty(),
            format!("== {expected}"),
        ),
        Check::at_most("direct_vs_closed_form", report.max_relative_gap(), 1e-8),
        Check::new("min_beta_rate", min_rate, report.all_positive(), "> 0 at every sample"),
        Check::at_most("skew_term", report.max_skew(), 1e-12),
        Check::new("flipped_gain_max_rate", max_flipped, max_flipped < 0.0, "< 0 at every sample"),
    ]
}

/// Inflation grid of the monotonicity study.
pub const INFLATION_GRID: [f64; 6] = [0.0, 0.02, 0.04, 0.06, 0.08, 0.1];

/// Finer inflation grid of the safety-guard threshold study.
pub fn threshold_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 * 0.01).collect()
}

fn clearances(rows: &[SweepRow]) -> Vec<f64> {
    rows.iter()
        .map(|r| r.outcome.as_ref().map(|s| s.min_clearance).unwrap_or(f64::NAN))
        .collect()
}

fn monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0])
}

fn monotone_check(name: &str, rows: &[SweepRow]) -> Check {
    let c = clearances(rows);
    let worst_drop = c.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    Check::new(name, worst_drop, monotone(&c), "min clearance non-decreasing in inflation")
}

pub fn safety_checks() -> Vec<Check> {
    let mut checks = Vec::new();

    let stat = sweep(&particle_static(), SweepParam::Inflation, &INFLATION_GRID, None);
    checks.push(monotone_check("particle_static_monotone", &stat));
    let collisions = stat.iter().filter(|r| r.outcome.as_ref().map_or(true, |s| s.collided)).count();
    checks.push(Check::new(
        "particle_static_collision_free",
        collisions as f64,
        collisions == 0,
        "no collisions on the grid",
    ));

    let grid = threshold_grid();
    let base = graze();
    let mut halved = base.clone();
    halved.esc.gain /= 2.0;
    let full_rows = sweep(&base, SweepParam::Inflation, &grid, None);
    let half_rows = sweep(&halved, SweepParam::Inflation, &grid, None);
    checks.push(monotone_check("graze_monotone", &full_rows));
    checks.push(monotone_check("graze_half_eps_monotone", &half_rows));
    let t_full = collision_free_threshold(&full_rows).unwrap_or(f64::INFINITY);
    let t_half = collision_free_threshold(&half_rows).unwrap_or(f64::INFINITY);
    checks.push(Check::new("graze_threshold", t_full, t_full.is_finite(), "collision free at the top of the grid"));
    checks.push(Check::new(
        "graze_threshold_half_eps",
        t_half,
        t_half < t_full,
        format!("< threshold at full epsilon ({t_full})"),
    ));

    // The exact gradient flow itself never leaves the free space.
    let s = particle_static();
    let nav = s.full_nav();
    let flow = gradient_flow(&nav, 0.0, s.start, 200.0, 0.01).expect("gradient flow stays free");
    let min_clear = flow.iter().map(|(_, p)| s.world.in_free_space(*p).clearance).fold(f64::INFINITY, f64::min);
    let end = flow.last().map(|(_, p)| p.norm()).unwrap_or(f64::NAN);
    checks.push(Check::new("gradient_flow_clearance", min_clear, min_clear > 0.0, "> 0"));
    checks.push(Check::at_most("gradient_flow_terminal_distance", end, 1e-3));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn samples_are_free_and_reproducible() {
        let world = particle_world(0.0);
        let a = free_space_samples(&world, 50, 7);
        assert_eq!(a, free_space_samples(&world, 50, 7));
        assert_ne!(a, free_space_samples(&world, 50, 8));
        assert!(a.iter().all(|&p| world.in_free_space(p).clearance > 0.0));
    }

    #[test]
    fn small_gradient_suite_passes() {
        for c in gradient_checks(50, 1) {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn repulsion_suite_passes() {
        for c in repulsion_checks(16) {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn monotone_rule() {
        assert!(monotone(&[0.1, 0.1, 0.2]));
        assert!(!monotone(&[0.2, 0.1]));
        assert!(!monotone(&[0.1, f64::NAN]));
    }
}
