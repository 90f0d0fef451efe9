//! Reference computations the closed loop is checked against.
//!
//! Nothing here runs the controller: the exact gradient flow, the averaged
//! flow and the boundary repulsion rate are all evaluated straight from the
//! navigation function and its analytic gradient, and [`finite_diff`] checks
//! those gradients independently.

use crate::error::{DomainError, OracleError};
use crate::esc::EscParams;
use crate::ode::integrate_field;
use crate::potential::{rk_gradient, NavFunction};
use crate::vec2::Vec2;

/// Central differences of a scalar field, one axis at a time.
pub fn finite_diff(f: impl Fn(Vec2) -> f64, p: Vec2, step: f64) -> Vec2 {
    let dx = Vec2::new(step, 0.0);
    let dy = Vec2::new(0.0, step);
    Vec2::new(
        (f(p + dx) - f(p - dx)) / (2.0 * step),
        (f(p + dy) - f(p - dy)) / (2.0 * step),
    )
}

/// `|a - b| / max(|a|, |b|, floor)`, the relative error used by gradient checks.
pub fn relative_error(a: Vec2, b: Vec2, floor: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(floor)
}

pub type Trajectory = Vec<(f64, Vec2)>;

/// RK4 integration of the exact gradient flow `p' = -grad phi(p)` with the
/// source frozen at time `t`.
pub fn gradient_flow(
    nav: &NavFunction<'_>,
    t: f64,
    start: Vec2,
    duration: f64,
    step: f64,
) -> Result<Trajectory, DomainError> {
    integrate_field(|p| nav.grad_phi(p, t).map(|g| -g), start, duration, step)
}

/// The averaged closed-loop field
/// `p_av' = -(alpha omega C / 2 (h^2 + omega^2)) [I + (h / omega) J] grad phi`,
/// where the derivative is taken in the dither phase `tau = omega t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedField {
    /// `alpha omega C / 2 (h^2 + omega^2)`, per unit of dither phase.
    pub gain: f64,
    /// `h / omega`, weight of the skew term.
    pub skew: f64,
    /// Dither frequency, converting phase rates to rates per second.
    pub omega: f64,
}

impl AveragedField {
    pub fn new(params: &EscParams) -> Self {
        let (w, h) = (params.omega, params.hpf_cutoff);
        AveragedField {
            gain: params.alpha * w * params.gain / (2.0 * (h * h + w * w)),
            skew: h / w,
            omega: w,
        }
    }

    /// `-gain [I + skew J] grad`, the rate per unit dither phase.
    pub fn phase_rate(&self, grad: Vec2) -> Vec2 {
        -(grad + grad.skew() * self.skew) * self.gain
    }

    /// The same field per second of simulated time.
    pub fn velocity(&self, grad: Vec2) -> Vec2 {
        self.phase_rate(grad) * self.omega
    }
}

/// RK4 integration of the averaged field in seconds.
pub fn averaged_flow(
    nav: &NavFunction<'_>,
    params: &EscParams,
    t: f64,
    start: Vec2,
    duration: f64,
    step: f64,
) -> Result<Trajectory, DomainError> {
    let field = AveragedField::new(params);
    integrate_field(|p| nav.grad_phi(p, t).map(|g| field.velocity(g)), start, duration, step)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReport {
    pub max_dev: f64,
    pub mean_dev: f64,
    pub horizon: f64,
    /// `alpha C / omega` of the run.
    pub epsilon: f64,
}

/// Deviation between the closed loop and its averaged flow, skipping the
/// filter's initial layer `t < 5 / h`.
pub fn deviation(full: &[(f64, Vec2)], avg: &[(f64, Vec2)], params: &EscParams) -> Result<DeviationReport, OracleError> {
    let mut report = deviation_after(full, avg, 5.0 / params.hpf_cutoff)?;
    report.epsilon = params.epsilon();
    Ok(report)
}

/// Pointwise distance statistics on the finer of the two time grids, with the
/// coarser trajectory linearly interpolated. Samples before `skip` are ignored.
pub fn deviation_after(a: &[(f64, Vec2)], b: &[(f64, Vec2)], skip: f64) -> Result<DeviationReport, OracleError> {
    let (fine, coarse) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let (Some(&(c0, _)), Some(&(c1, _))) = (coarse.first(), coarse.last()) else {
        return Err(OracleError::EmptyOverlap);
    };
    let lo = c0.max(skip);

    let mut max_dev = 0.0_f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut first = f64::NAN;
    let mut last = f64::NAN;
    let mut j = 0;
    for &(t, p) in fine.iter().filter(|(t, _)| *t >= lo && *t <= c1) {
        while j + 2 < coarse.len() && coarse[j + 1].0 < t {
            j += 1;
        }
        let q = interpolate(coarse, j, t);
        let d = p.distance(q);
        max_dev = max_dev.max(d);
        sum += d;
        count += 1;
        if count == 1 {
            first = t;
        }
        last = t;
    }
    if count == 0 {
        return Err(OracleError::EmptyOverlap);
    }
    Ok(DeviationReport {
        max_dev,
        mean_dev: sum / count as f64,
        horizon: last - first,
        epsilon: f64::NAN,
    })
}

fn interpolate(traj: &[(f64, Vec2)], j: usize, t: f64) -> Vec2 {
    if traj.len() == 1 {
        return traj[0].1;
    }
    let (t0, p0) = traj[j];
    let (t1, p1) = traj[j + 1];
    if t1 == t0 {
        return p1;
    }
    p0.lerp(p1, ((t - t0) / (t1 - t0)).clamp(0.0, 1.0))
}

/// Rate of change of the obstacle product along the averaged flow at one
/// boundary point, computed two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepulsionSample {
    pub obstacle: u32,
    pub point: Vec2,
    /// `-gain grad_beta^T [I + (h / omega) J] grad_phi`.
    pub direct: f64,
    /// `(gain / k) f0^-k |grad_beta|^2`.
    pub closed_form: f64,
    /// `grad_beta^T J grad_beta`, zero by skew symmetry.
    pub skew_term: f64,
}

impl RepulsionSample {
    pub fn relative_gap(&self) -> f64 {
        (self.direct - self.closed_form).abs() / self.direct.abs().max(self.closed_form.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepulsionReport {
    pub samples: Vec<RepulsionSample>,
    /// Boundary points skipped because the source sits on them.
    pub skipped: Vec<Vec2>,
}

impl RepulsionReport {
    pub fn max_relative_gap(&self) -> f64 {
        self.samples.iter().map(|s| s.relative_gap()).fold(0.0, f64::max)
    }

    pub fn max_skew(&self) -> f64 {
        self.samples.iter().map(|s| s.skew_term.abs()).fold(0.0, f64::max)
    }

    pub fn all_positive(&self) -> bool {
        self.samples.iter().all(|s| s.direct > 0.0 && s.closed_form > 0.0)
    }
}

/// Samples `n` points, evenly spaced by angle, on the inflated boundary of
/// every known obstacle and evaluates how fast the obstacle product grows
/// along the averaged flow there. Uses the source position at time `t`.
pub fn repulsion_check(
    nav: &NavFunction<'_>,
    params: &EscParams,
    t: f64,
    n: usize,
) -> Result<RepulsionReport, OracleError> {
    if nav.k() == 0 {
        return Err(OracleError::NeedsPositiveOrder);
    }
    let field = AveragedField::new(params);
    let k = nav.k();
    let mut samples = Vec::with_capacity(n * nav.known().len());
    let mut skipped = Vec::new();
    for id in nav.known() {
        let Some(o) = nav.world().obstacle(*id) else { continue };
        for j in 0..n {
            let angle = std::f64::consts::TAU * j as f64 / n as f64;
            let point = o.center + Vec2::from_polar(o.effective_radius(), angle);
            let f0 = nav.source().f0(point, t);
            if f0 == 0.0 {
                skipped.push(point);
                continue;
            }
            // beta vanishes on the boundary; pin it so rounding cannot push
            // the point outside the domain.
            let grad_beta = nav.grad_beta(point);
            let grad_phi = rk_gradient(f0, nav.source().grad_f0(point, t), 0.0, grad_beta, k)
                .ok_or(DomainError::DegenerateDenominator { p: point })?;
            let direct = grad_beta.dot(field.phase_rate(grad_phi));
            let closed_form = field.gain * f0.powi(-(k as i32)) / k as f64 * grad_beta.norm_squared();
            samples.push(RepulsionSample {
                obstacle: *id,
                point,
                direct,
                closed_form,
                skew_term: grad_beta.dot(grad_beta.skew()),
            });
        }
    }
    Ok(RepulsionReport { samples, skipped })
}
