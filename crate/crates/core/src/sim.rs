//! Closed-loop scenario execution.
//!
//! Each controller tick moves the source, scans for nearby obstacles, measures
//! the navigation function at the dithered probe point, runs the controller,
//! advances the agent and finally checks for collisions and convergence.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{DomainError, SimError};
use crate::esc::{continuous_rhs, perturbation, EscParams, EscState};
use crate::ode::{rk4_step, steps, LoopState};
use crate::potential::{NavFunction, SourcePotential};
use crate::vec2::Vec2;
use crate::world::{Constraint, World};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavMode {
    Fixed { k: u32 },
    Discovery { bootstrap_scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integration {
    /// Zero-order-hold controller ticking at the configured sample rate.
    Sampled,
    /// Unsaturated continuous loop integrated with RK4 at a fixed step.
    Continuous { step: f64 },
}

impl Integration {
    /// Default continuous step, 1/40 of a dither period.
    pub fn continuous_default(omega: f64) -> Self {
        Integration::Continuous {
            step: std::f64::consts::TAU / (40.0 * omega),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionPolicy {
    Stop,
    Continue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub world: World,
    pub source: SourcePotential,
    pub esc: EscParams,
    pub nav_mode: NavMode,
    pub start: Vec2,
    pub duration: f64,
    pub integration: Integration,
    /// Obstacles within this distance of their inflated surface are detected;
    /// `f64::INFINITY` reveals everything on the first tick.
    pub detection_radius: f64,
    pub initially_known: BTreeSet<u32>,
    pub convergence_radius: f64,
    pub convergence_hold: f64,
    pub on_collision: CollisionPolicy,
}

impl Scenario {
    /// Navigation function at `t = 0`, before the first sensor scan.
    pub fn initial_nav(&self) -> NavFunction<'_> {
        match self.nav_mode {
            NavMode::Fixed { k } => {
                NavFunction::fixed(&self.world, &self.source, k, self.initially_known.clone())
            }
            NavMode::Discovery { bootstrap_scale } => {
                NavFunction::discovery(&self.world, &self.source, bootstrap_scale)
                    .discover(&self.initially_known)
            }
        }
    }

    /// Navigation function with every obstacle known. In discovery mode the
    /// order is the obstacle count, which is where a full discovery ends.
    pub fn full_nav(&self) -> NavFunction<'_> {
        let ids = self.world.ids();
        match self.nav_mode {
            NavMode::Fixed { k } => NavFunction::fixed(&self.world, &self.source, k, ids),
            NavMode::Discovery { bootstrap_scale } => {
                NavFunction::discovery(&self.world, &self.source, bootstrap_scale).discover(&ids)
            }
        }
    }

    /// Tick length of the configured integration mode.
    pub fn step(&self) -> f64 {
        match self.integration {
            Integration::Sampled => self.esc.tick(),
            Integration::Continuous { step } => step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub p: Vec2,
    pub v_cmd: Vec2,
    pub eta: f64,
    pub phi_meas: f64,
    pub f0_meas: f64,
    pub source_pos: Vec2,
    pub known_count: usize,
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Discovery { id: u32 },
    Collision { p: Vec2, constraint: Constraint },
    Saturation,
    Converged,
    Warning(String),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Discovery { .. } => "discovery",
            EventKind::Collision { .. } => "collision",
            EventKind::Saturation => "saturation",
            EventKind::Converged => "converged",
            EventKind::Warning(_) => "warning",
        }
    }

    pub fn payload(&self) -> String {
        match self {
            EventKind::Discovery { id } => id.to_string(),
            EventKind::Collision { p, constraint } => {
                let what = match constraint {
                    Constraint::Workspace => "workspace".to_string(),
                    Constraint::Obstacle(id) => format!("obstacle {id}"),
                };
                format!("{what} at {:.16e} {:.16e}", p.x, p.y)
            }
            EventKind::Saturation | EventKind::Converged => String::new(),
            EventKind::Warning(text) => text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} {} {}", self.t, self.kind.name(), self.kind.payload())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub final_t: f64,
    pub final_distance: f64,
    pub min_clearance: f64,
    pub converged: bool,
    pub collided: bool,
    pub path_length: f64,
    pub ticks: usize,
    pub known_count: usize,
    pub k: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trajectory: Vec<TrajectorySample>,
    pub events: Vec<Event>,
    pub summary: Summary,
    pub known: BTreeSet<u32>,
}

impl RunOutput {
    pub fn positions(&self) -> Vec<(f64, Vec2)> {
        self.trajectory.iter().map(|s| (s.t, s.p)).collect()
    }

    pub fn count(&self, name: &str) -> usize {
        self.events.iter().filter(|e| e.kind.name() == name).count()
    }
}

/// Ids of obstacles whose inflated surface is within `detection_radius` of `p`
/// and that the navigation function does not know yet.
pub fn sensor_scan(world: &World, nav: &NavFunction<'_>, p: Vec2, detection_radius: f64) -> BTreeSet<u32> {
    world
        .obstacles()
        .iter()
        .filter(|o| !nav.known().contains(&o.id))
        .filter(|o| p.distance(o.center) - o.effective_radius() <= detection_radius)
        .map(|o| o.id)
        .collect()
}

/// Collision against the true (uninflated) geometry.
pub fn check_collision(world: &World, p: Vec2) -> Option<EventKind> {
    let check = world.in_free_space(p);
    (!check.free).then_some(EventKind::Collision {
        p,
        constraint: check.nearest,
    })
}

/// A probe measurement. Probes inside a known inflated obstacle read as 1,
/// the value of the navigation function on the obstacle surface.
#[derive(Debug, Clone, Copy)]
struct Measurement {
    phi: f64,
    clamped: bool,
    outside: bool,
}

fn measure(nav: &NavFunction<'_>, probe: Vec2, t: f64) -> Measurement {
    match nav.eval(probe, t) {
        Ok((phi, clamped)) => Measurement {
            phi,
            clamped,
            outside: false,
        },
        Err(DomainError::OutsideFreeSpace { .. }) | Err(DomainError::DegenerateDenominator { .. }) => {
            Measurement {
                phi: 1.0,
                clamped: false,
                outside: true,
            }
        }
    }
}

/// Edge-triggered flags so that repeated conditions log once per episode.
#[derive(Default)]
struct Latches {
    saturated: bool,
    outside: bool,
    clamped: bool,
    colliding: bool,
}

struct Convergence {
    radius: f64,
    hold: f64,
    since: Option<f64>,
    announced: bool,
}

impl Convergence {
    fn update(&mut self, t: f64, distance: f64, events: &mut Vec<Event>) {
        if distance <= self.radius {
            let since = *self.since.get_or_insert(t);
            if !self.announced && t - since >= self.hold {
                self.announced = true;
                events.push(Event {
                    t,
                    kind: EventKind::Converged,
                });
            }
        } else {
            self.since = None;
            self.announced = false;
        }
    }

    fn holds_at(&self, t: f64) -> bool {
        self.since.is_some_and(|s| t - s >= self.hold)
    }
}

/// Runs a scenario to completion (or to the first collision under
/// [`CollisionPolicy::Stop`]).
pub fn run(scenario: &Scenario) -> Result<RunOutput, SimError> {
    let world = &scenario.world;
    let source = &scenario.source;
    let esc = &scenario.esc;
    if !scenario.start.is_finite() || !world.in_inflated_free_space(scenario.start) {
        return Err(SimError::StartNotFree(scenario.start));
    }

    let mut nav = scenario.initial_nav();
    let mut events: Vec<Event> = esc
        .warnings()
        .into_iter()
        .map(|w| Event {
            t: 0.0,
            kind: EventKind::Warning(w.to_string()),
        })
        .collect();
    let mut trajectory = Vec::new();
    let mut latches = Latches::default();
    let mut convergence = Convergence {
        radius: scenario.convergence_radius,
        hold: scenario.convergence_hold,
        since: None,
        announced: false,
    };

    let step = scenario.step();
    let n = steps(scenario.duration, step);
    let mut p = scenario.start;
    let mut t = 0.0;
    let mut state: Option<EscState> = None;
    let mut path_length = 0.0;
    let mut min_clearance = world.in_free_space(p).clearance;
    let mut collided = false;
    let mut ticks = 0;
    convergence.update(0.0, p.distance(source.position(0.0)), &mut events);

    for i in 0..n {
        t = i as f64 * step;
        let h = ((i + 1) as f64 * step).min(scenario.duration) - t;
        let src = source.position(t);

        let seen = sensor_scan(world, &nav, p, scenario.detection_radius);
        if !seen.is_empty() {
            events.extend(seen.iter().map(|&id| Event {
                t,
                kind: EventKind::Discovery { id },
            }));
            nav = nav.discover(&seen);
        }

        let probe = p + perturbation(esc, t);
        let m = measure(&nav, probe, t);
        note_measurement(&m, t, &mut latches, &mut events);
        let eta = state.get_or_insert_with(|| EscState::new(m.phi, t)).eta;

        let (next, v_cmd) = match scenario.integration {
            Integration::Sampled => {
                let st = state.as_mut().expect("initialized above");
                st.t = t;
                let cmd = st.step(m.phi, esc, h);
                if cmd.saturated && !latches.saturated {
                    events.push(Event {
                        t,
                        kind: EventKind::Saturation,
                    });
                }
                latches.saturated = cmd.saturated;
                (
                    LoopState {
                        p: p + cmd.velocity * h,
                        eta: st.eta,
                    },
                    cmd.velocity,
                )
            }
            Integration::Continuous { .. } => {
                let rhs = |tau: f64, y: LoopState| {
                    continuous_rhs(y.p, y.eta, tau, esc, |q, s| {
                        Ok::<_, DomainError>(measure(&nav, q, s).phi)
                    })
                    .map(|(dp, deta)| LoopState { p: dp, eta: deta })
                };
                let v = continuous_rhs(p, eta, t, esc, |_, _| Ok::<_, DomainError>(m.phi))?.0;
                let next = rk4_step(rhs, t, LoopState { p, eta }, h)?;
                let st = state.as_mut().expect("initialized above");
                st.eta = next.eta;
                st.t = t + h;
                st.last_command = v;
                (next, v)
            }
        };

        trajectory.push(TrajectorySample {
            t,
            p,
            v_cmd,
            eta,
            phi_meas: m.phi,
            f0_meas: source.f0(probe, t),
            source_pos: src,
            known_count: nav.known().len(),
            clearance: world.in_free_space(p).clearance,
        });

        if !next.p.is_finite() || !next.eta.is_finite() {
            return Err(SimError::NonFinite { t: t + h });
        }
        path_length += next.p.distance(p);
        p = next.p;
        t += h;
        ticks += 1;

        let check = world.in_free_space(p);
        min_clearance = min_clearance.min(check.clearance);
        match check_collision(world, p) {
            Some(kind) => {
                if !latches.colliding {
                    events.push(Event { t, kind });
                }
                latches.colliding = true;
                collided = true;
                if scenario.on_collision == CollisionPolicy::Stop {
                    break;
                }
            }
            None => latches.colliding = false,
        }
        convergence.update(t, p.distance(source.position(t)), &mut events);
    }

    // Closing sample: state only, no scan and no controller update.
    let probe = p + perturbation(esc, t);
    let m = measure(&nav, probe, t);
    let st = state.unwrap_or_else(|| EscState::new(m.phi, t));
    let src = source.position(t);
    trajectory.push(TrajectorySample {
        t,
        p,
        v_cmd: st.last_command,
        eta: st.eta,
        phi_meas: m.phi,
        f0_meas: source.f0(probe, t),
        source_pos: src,
        known_count: nav.known().len(),
        clearance: world.in_free_space(p).clearance,
    });

    let summary = Summary {
        final_t: t,
        final_distance: p.distance(src),
        min_clearance,
        converged: convergence.holds_at(t),
        collided,
        path_length,
        ticks,
        known_count: nav.known().len(),
        k: nav.k(),
    };
    Ok(RunOutput {
        trajectory,
        events,
        summary,
        known: nav.known().clone(),
    })
}

fn note_measurement(m: &Measurement, t: f64, latches: &mut Latches, events: &mut Vec<Event>) {
    if m.outside && !latches.outside {
        events.push(Event {
            t,
            kind: EventKind::Warning("probe inside a known inflated obstacle; reading clamped to 1".into()),
        });
    }
    latches.outside = m.outside;
    if m.clamped && !latches.clamped {
        events.push(Event {
            t,
            kind: EventKind::Warning("navigation function denominator underflowed; value clamped to 1".into()),
        });
    }
    latches.clamped = m.clamped;
}
