//! Source potential and the Rimon-Koditschek navigation function built on it.

use std::collections::BTreeSet;

use crate::error::DomainError;
use crate::vec2::Vec2;
use crate::world::World;

/// One stop on the source path: the source reaches `at`, then waits there
/// until `hold_until` (seconds) before heading to the next waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub at: Vec2,
    pub hold_until: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Leg {
    from: Vec2,
    to: Vec2,
    depart: f64,
    arrive: f64,
}

/// Quadratic source potential `q_x (x - x_s)^2 + q_y (y - y_s)^2` whose minimum
/// follows a piecewise-linear path at constant speed.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePotential {
    q: Vec2,
    speed: f64,
    waypoints: Vec<Waypoint>,
    legs: Vec<Leg>,
}

impl SourcePotential {
    /// A source that never moves.
    pub fn fixed(q: Vec2, at: Vec2) -> Self {
        Self::moving(
            q,
            0.0,
            vec![Waypoint {
                at,
                hold_until: f64::INFINITY,
            }],
        )
        .expect("single waypoint is always a valid schedule")
    }

    /// A source that starts at the first waypoint and visits the rest in order
    /// at `speed` m/s. Returns `None` when the schedule is empty, weights are
    /// not positive, or the speed is not positive while there is somewhere to go.
    pub fn moving(q: Vec2, speed: f64, waypoints: Vec<Waypoint>) -> Option<Self> {
        if waypoints.is_empty() || !(q.x > 0.0 && q.y > 0.0) || !q.is_finite() {
            return None;
        }
        if waypoints.iter().any(|w| !w.at.is_finite() || w.hold_until.is_nan()) {
            return None;
        }
        if waypoints.len() > 1 && !(speed.is_finite() && speed > 0.0) {
            return None;
        }
        let mut legs = Vec::with_capacity(waypoints.len().saturating_sub(1));
        let mut arrive = 0.0_f64;
        for pair in waypoints.windows(2) {
            let depart = arrive.max(pair[0].hold_until);
            if !depart.is_finite() {
                break;
            }
            arrive = depart + pair[0].at.distance(pair[1].at) / speed;
            legs.push(Leg {
                from: pair[0].at,
                to: pair[1].at,
                depart,
                arrive,
            });
        }
        Some(SourcePotential {
            q,
            speed,
            waypoints,
            legs,
        })
    }

    pub fn weights(&self) -> Vec2 {
        self.q
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    /// Position of the minimum at time `t`.
    pub fn position(&self, t: f64) -> Vec2 {
        let mut pos = self.waypoints[0].at;
        for leg in &self.legs {
            if t < leg.depart {
                return pos;
            }
            if t < leg.arrive {
                let s = (t - leg.depart) / (leg.arrive - leg.depart);
                return leg.from.lerp(leg.to, s);
            }
            pos = leg.to;
        }
        pos
    }

    pub fn f0(&self, p: Vec2, t: f64) -> f64 {
        let d = p - self.position(t);
        self.q.x * d.x * d.x + self.q.y * d.y * d.y
    }

    pub fn grad_f0(&self, p: Vec2, t: f64) -> Vec2 {
        let d = p - self.position(t);
        Vec2::new(2.0 * self.q.x * d.x, 2.0 * self.q.y * d.y)
    }
}

/// How the order parameter responds to newly discovered obstacles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderMode {
    /// `k` never changes.
    Fixed,
    /// `k` grows by one per discovered obstacle, starting from the bootstrap form at `k = 0`.
    Discovery,
}

/// `f0 / (f0^k + beta)^(1/k)`, with the underflow guard flag.
///
/// Returns `(value, clamped)` with the value capped at 1; `clamped` is set
/// when `f0 > 0` but the denominator underflowed to zero and the value was
/// pinned to 1.
pub fn rk_value(f0: f64, beta: f64, k: u32) -> (f64, bool) {
    let den = f0.powi(k as i32) + beta;
    if den <= 0.0 {
        return if f0 > 0.0 { (1.0, true) } else { (0.0, false) };
    }
    // The root can round a hair below f0 when beta is negligible.
    ((f0 / den.powf(1.0 / k as f64)).min(1.0), false)
}

/// `(f0^k + beta)^(-1-1/k) * (beta grad_f0 - (f0 / k) grad_beta)`.
pub fn rk_gradient(f0: f64, grad_f0: Vec2, beta: f64, grad_beta: Vec2, k: u32) -> Option<Vec2> {
    let kf = k as f64;
    let den = f0.powi(k as i32) + beta;
    if den <= 0.0 {
        return None;
    }
    let scale = den.powf(-1.0 - 1.0 / kf);
    Some((grad_f0 * beta - grad_beta * (f0 / kf)) * scale)
}

/// `s f0 / (s f0 + beta)`, the order-zero form used before any obstacle is known.
pub fn bootstrap_value(f0: f64, beta: f64, scale: f64) -> f64 {
    let num = scale * f0;
    let den = num + beta;
    if den <= 0.0 {
        return if num > 0.0 { 1.0 } else { 0.0 };
    }
    num / den
}

pub fn bootstrap_gradient(
    f0: f64,
    grad_f0: Vec2,
    beta: f64,
    grad_beta: Vec2,
    scale: f64,
) -> Option<Vec2> {
    let den = scale * f0 + beta;
    if den <= 0.0 {
        return None;
    }
    Some((grad_f0 * beta - grad_beta * f0) * (scale / (den * den)))
}

/// Rimon-Koditschek navigation function over the obstacles known so far.
#[derive(Debug, Clone, PartialEq)]
pub struct NavFunction<'a> {
    world: &'a World,
    source: &'a SourcePotential,
    k: u32,
    known: BTreeSet<u32>,
    mode: OrderMode,
    bootstrap_scale: f64,
}

pub const DEFAULT_BOOTSTRAP_SCALE: f64 = 0.1;

impl<'a> NavFunction<'a> {
    /// Fixed order `k` with the given obstacles known from the start.
    pub fn fixed(world: &'a World, source: &'a SourcePotential, k: u32, known: BTreeSet<u32>) -> Self {
        assert!(k >= 1, "fixed-order navigation function needs k >= 1");
        NavFunction {
            world,
            source,
            k,
            known,
            mode: OrderMode::Fixed,
            bootstrap_scale: DEFAULT_BOOTSTRAP_SCALE,
        }
    }

    /// Fixed order `k` with every obstacle of the world known.
    pub fn fully_known(world: &'a World, source: &'a SourcePotential, k: u32) -> Self {
        Self::fixed(world, source, k, world.ids())
    }

    /// Discovery mode: nothing known and `k = 0`.
    pub fn discovery(world: &'a World, source: &'a SourcePotential, bootstrap_scale: f64) -> Self {
        NavFunction {
            world,
            source,
            k: 0,
            known: BTreeSet::new(),
            mode: OrderMode::Discovery,
            bootstrap_scale,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn known(&self) -> &BTreeSet<u32> {
        &self.known
    }

    pub fn mode(&self) -> OrderMode {
        self.mode
    }

    pub fn world(&self) -> &'a World {
        self.world
    }

    pub fn source(&self) -> &'a SourcePotential {
        self.source
    }

    pub fn bootstrap_scale(&self) -> f64 {
        self.bootstrap_scale
    }

    pub fn beta(&self, p: Vec2) -> f64 {
        self.world.beta_product(&self.known, p)
    }

    pub fn grad_beta(&self, p: Vec2) -> Vec2 {
        self.world.grad_beta_product(&self.known, p)
    }

    /// Value and underflow-clamp flag. Fails when `p` is outside the known
    /// inflated free space.
    pub fn eval(&self, p: Vec2, t: f64) -> Result<(f64, bool), DomainError> {
        let beta = self.beta(p);
        if beta < 0.0 {
            return Err(DomainError::OutsideFreeSpace { p, beta });
        }
        let f0 = self.source.f0(p, t);
        if self.k == 0 {
            Ok((bootstrap_value(f0, beta, self.bootstrap_scale), false))
        } else {
            Ok(rk_value(f0, beta, self.k))
        }
    }

    pub fn phi(&self, p: Vec2, t: f64) -> Result<f64, DomainError> {
        self.eval(p, t).map(|(v, _)| v)
    }

    pub fn grad_phi(&self, p: Vec2, t: f64) -> Result<Vec2, DomainError> {
        let beta = self.beta(p);
        if beta < 0.0 {
            return Err(DomainError::OutsideFreeSpace { p, beta });
        }
        let f0 = self.source.f0(p, t);
        let grad_f0 = self.source.grad_f0(p, t);
        let grad_beta = self.grad_beta(p);
        let g = if self.k == 0 {
            bootstrap_gradient(f0, grad_f0, beta, grad_beta, self.bootstrap_scale)
        } else {
            rk_gradient(f0, grad_f0, beta, grad_beta, self.k)
        };
        g.ok_or(DomainError::DegenerateDenominator { p })
    }

    /// Adds newly seen obstacles. Ids already known are ignored; in discovery
    /// mode `k` grows by the number of genuinely new ids.
    pub fn discover(&self, newly_seen: &BTreeSet<u32>) -> Self {
        let mut next = self.clone();
        let added = newly_seen
            .iter()
            .filter(|id| next.known.insert(**id))
            .count() as u32;
        if self.mode == OrderMode::Discovery {
            next.k += added;
        }
        next
    }
}
