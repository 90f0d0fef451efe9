//! Scenario documents (versioned JSON) and the bundled example scenarios.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use crate::error::ScenarioError;
use crate::esc::EscParams;
use crate::potential::{SourcePotential, Waypoint, DEFAULT_BOOTSTRAP_SCALE};
use crate::sim::{CollisionPolicy, Integration, NavMode, Scenario};
use crate::vec2::Vec2;
use crate::world::{Obstacle, World};

pub const SCHEMA_VERSION: u32 = 1;

/// Bundled scenarios by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("particle_static", include_str!("../scenarios/particle_static.json")),
    ("particle_moving", include_str!("../scenarios/particle_moving.json")),
    ("discovery", include_str!("../scenarios/discovery.json")),
    ("graze", include_str!("../scenarios/graze.json")),
];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub name: String,
    pub world: WorldSpec,
    pub source: SourceSpec,
    pub esc: EscSpec,
    pub nav: NavSpec,
    pub start: Vec2,
    pub duration: f64,
    #[serde(default)]
    pub integration: IntegrationSpec,
    #[serde(default)]
    pub detection_radius: Option<DetectionSpec>,
    #[serde(default)]
    pub initially_known: Vec<u32>,
    pub convergence: ConvergenceSpec,
    #[serde(default)]
    pub on_collision: CollisionSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub center: Vec2,
    pub radius: f64,
    #[serde(default)]
    pub inflation: f64,
    /// `(x, y, r)` triples; the id of an obstacle is its index.
    pub obstacles: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub q: Vec2,
    #[serde(default)]
    pub speed: f64,
    pub path: Vec<WaypointSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointSpec {
    pub at: Vec2,
    #[serde(default)]
    pub hold_until: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscSpec {
    pub omega: f64,
    pub alpha: f64,
    /// Magnitude of the loop gain; the descent sign is built into the controller.
    pub gain: f64,
    pub hpf_cutoff: f64,
    #[serde(default)]
    pub sample_rate: Option<f64>,
    #[serde(default)]
    pub v_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum NavSpec {
    Fixed { k: u32 },
    Discovery { bootstrap_scale: Option<f64> },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum IntegrationSpec {
    #[default]
    Sampled,
    Continuous { step: Option<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DetectionSpec {
    Radius(f64),
    Keyword(DetectionKeyword),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionKeyword {
    All,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub radius: f64,
    #[serde(default)]
    pub hold: f64,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionSpec {
    #[default]
    Stop,
    Continue,
}

fn positive(field: &str, v: f64) -> Result<f64, ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ScenarioError::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64, ScenarioError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ScenarioError::invalid(field, format!("must be non-negative and finite, got {v}")))
    }
}

fn finite(field: &str, v: Vec2) -> Result<Vec2, ScenarioError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ScenarioError::invalid(field, "must be finite"))
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| {
            // serde_json appends the position to its message; it is kept separately.
            let message = e.to_string();
            let message = match message.rsplit_once(" at line ") {
                Some((head, _)) => head.to_string(),
                None => message,
            };
            ScenarioError::Parse {
                line: e.line(),
                column: e.column(),
                message,
            }
        })
    }

    /// Checks every field and builds the runnable scenario.
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        if self.version != SCHEMA_VERSION {
            return Err(ScenarioError::invalid(
                "version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.version),
            ));
        }

        let w = &self.world;
        let obstacles = w
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, &[x, y, r])| Obstacle::new(i as u32, Vec2::new(x, y), r));
        let world = World::new(
            finite("world.center", w.center)?,
            w.radius,
            w.inflation,
            obstacles,
        )?;

        let q = finite("source.q", self.source.q)?;
        if !(q.x > 0.0 && q.y > 0.0) {
            return Err(ScenarioError::invalid("source.q", "weights must be positive"));
        }
        if self.source.path.is_empty() {
            return Err(ScenarioError::invalid("source.path", "needs at least one waypoint"));
        }
        let waypoints = self
            .source
            .path
            .iter()
            .enumerate()
            .map(|(i, wp)| {
                Ok(Waypoint {
                    at: finite(&format!("source.path[{i}].at"), wp.at)?,
                    hold_until: non_negative(&format!("source.path[{i}].hold_until"), wp.hold_until)?,
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        if waypoints.len() > 1 {
            positive("source.speed", self.source.speed)?;
        }
        let source = SourcePotential::moving(q, self.source.speed, waypoints)
            .ok_or_else(|| ScenarioError::invalid("source", "invalid schedule"))?;

        let e = &self.esc;
        let omega = positive("esc.omega", e.omega)?;
        let mut esc = EscParams::new(
            omega,
            positive("esc.alpha", e.alpha)?,
            non_negative("esc.gain", e.gain)?,
            positive("esc.hpf_cutoff", e.hpf_cutoff)?,
            match e.v_max {
                Some(v) => positive("esc.v_max", v)?,
                None => f64::INFINITY,
            },
        );
        if let Some(rate) = e.sample_rate {
            esc.sample_rate = positive("esc.sample_rate", rate)?;
        }

        let nav_mode = match self.nav {
            NavSpec::Fixed { k } => {
                if k == 0 {
                    return Err(ScenarioError::invalid("nav.k", "fixed order must be at least 1"));
                }
                NavMode::Fixed { k }
            }
            NavSpec::Discovery { bootstrap_scale } => NavMode::Discovery {
                bootstrap_scale: positive(
                    "nav.bootstrap_scale",
                    bootstrap_scale.unwrap_or(DEFAULT_BOOTSTRAP_SCALE),
                )?,
            },
        };

        let integration = match self.integration {
            IntegrationSpec::Sampled => Integration::Sampled,
            IntegrationSpec::Continuous { step: None } => Integration::continuous_default(omega),
            IntegrationSpec::Continuous { step: Some(s) } => Integration::Continuous {
                step: positive("integration.step", s)?,
            },
        };

        let detection_radius = match self.detection_radius {
            Some(DetectionSpec::Radius(r)) => non_negative("detection_radius", r)?,
            Some(DetectionSpec::Keyword(DetectionKeyword::All)) => f64::INFINITY,
            None => default_detection_radius(&world),
        };

        let ids = world.ids();
        let initially_known: BTreeSet<u32> = self.initially_known.iter().copied().collect();
        if let Some(bad) = initially_known.iter().find(|id| !ids.contains(id)) {
            return Err(ScenarioError::invalid("initially_known", format!("unknown obstacle id {bad}")));
        }

        Ok(Scenario {
            name: self.name,
            world,
            source,
            esc,
            nav_mode,
            start: finite("start", self.start)?,
            duration: non_negative("duration", self.duration)?,
            integration,
            detection_radius,
            initially_known,
            convergence_radius: positive("convergence.radius", self.convergence.radius)?,
            convergence_hold: non_negative("convergence.hold", self.convergence.hold)?,
            on_collision: match self.on_collision {
                CollisionSpec::Stop => CollisionPolicy::Stop,
                CollisionSpec::Continue => CollisionPolicy::Continue,
            },
        })
    }
}

/// Three times the largest obstacle radius.
pub fn default_detection_radius(world: &World) -> f64 {
    3.0 * world.obstacles().iter().map(|o| o.radius).fold(0.0, f64::max)
}

pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
    ScenarioFile::parse(text)?.into_scenario()
}

pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn bundled(name: &str) -> Result<Scenario, ScenarioError> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| ScenarioError::UnknownBundled(name.to_string()))
        .and_then(|(_, text)| parse(text))
}

/// Resolves `bundled:<name>` or a file path.
pub fn resolve(spec: &str) -> Result<Scenario, ScenarioError> {
    match spec.strip_prefix("bundled:") {
        Some(name) => bundled(name),
        None => load(Path::new(spec)),
    }
}

/// The five-disc particle world: radius-3 workspace, discs of radius 0.25.
pub fn particle_world(inflation: f64) -> World {
    const CENTERS: [(f64, f64); 5] = [(-1.0, 0.0), (-0.2, 1.2), (1.0, 0.7), (1.0, -1.0), (-0.5, -1.0)];
    World::new(
        Vec2::ZERO,
        3.0,
        inflation,
        CENTERS
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Obstacle::new(i as u32, Vec2::new(x, y), 0.25)),
    )
    .expect("particle world is valid")
}

pub fn particle_static() -> Scenario {
    bundled("particle_static").expect("bundled scenario parses")
}

pub fn particle_moving() -> Scenario {
    bundled("particle_moving").expect("bundled scenario parses")
}

pub fn discovery() -> Scenario {
    bundled("discovery").expect("bundled scenario parses")
}

pub fn graze() -> Scenario {
    bundled("graze").expect("bundled scenario parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_parse() {
        for (name, _) in BUNDLED {
            let s = bundled(name).unwrap();
            assert_eq!(&s.name, name);
        }
        assert!(matches!(bundled("nope"), Err(ScenarioError::UnknownBundled(_))));
    }

    #[test]
    fn particle_static_matches_reference_setup() {
        let s = particle_static();
        assert_eq!(s.world, particle_world(0.0));
        assert_eq!(s.esc.omega, 40.0);
        assert_eq!(s.esc.alpha, 0.07);
        assert_eq!(s.esc.gain, 10.0);
        assert_eq!(s.esc.hpf_cutoff, 20.0);
        assert_eq!(s.esc.sample_rate, 400.0);
        assert_eq!(s.nav_mode, NavMode::Fixed { k: 6 });
        assert_eq!(s.start, Vec2::new(0.0, 2.5));
        assert_eq!(s.source.weights(), Vec2::new(1.0, 1.0));
        assert_eq!(s.source.position(0.0), Vec2::ZERO);
        assert_eq!(s.detection_radius, f64::INFINITY);
    }

    #[test]
    fn particle_moving_schedule() {
        let s = particle_moving();
        assert_eq!(s.source.speed(), 0.2);
        assert_eq!(s.source.position(10.0), Vec2::ZERO);
        assert_eq!(s.source.position(1e3), Vec2::new(-0.47, 0.38));
    }

    #[test]
    fn unknown_fields_rejected_with_position() {
        let text = BUNDLED[0].1.replacen("\"duration\"", "\"bogus\": 1,\n  \"duration\"", 1);
        match ScenarioFile::parse(&text) {
            Err(ScenarioError::Parse { line, message, .. }) => {
                assert!(line > 1);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let text = BUNDLED[0].1.replacen("\"k\": 6", "\"k\": 0", 1);
        match parse(&text) {
            Err(ScenarioError::Invalid { field, .. }) => assert_eq!(field, "nav.k"),
            other => panic!("expected invalid, got {other:?}"),
        }
        let text = BUNDLED[0].1.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(parse(&text), Err(ScenarioError::Invalid { .. })));
    }

    #[test]
    fn intersecting_obstacles_rejected() {
        let text = r#"{
  "version": 1, "name": "x",
  "world": {"center": [0, 0], "radius": 3, "obstacles": [[0, 0, 0.5], [0.8, 0, 0.5]]},
  "source": {"q": [1, 1], "path": [{"at": [0, 0]}]},
  "esc": {"omega": 40, "alpha": 0.07, "gain": 10, "hpf_cutoff": 20},
  "nav": {"mode": "fixed", "k": 3},
  "start": [0, 2], "duration": 1,
  "convergence": {"radius": 0.2}
}"#;
        assert!(matches!(parse(text), Err(ScenarioError::World(_))));
    }

    #[test]
    fn defaults_apply() {
        let text = r#"{
  "version": 1, "name": "x",
  "world": {"center": [0, 0], "radius": 3, "obstacles": [[1, 0, 0.2], [-1, 0, 0.3]]},
  "source": {"q": [1, 1], "path": [{"at": [0, 0]}]},
  "esc": {"omega": 40, "alpha": 0.07, "gain": 10, "hpf_cutoff": 20},
  "nav": {"mode": "discovery"},
  "integration": {"mode": "continuous"},
  "start": [0, 2], "duration": 1,
  "convergence": {"radius": 0.2}
}"#;
        let s = parse(text).unwrap();
        assert!((s.detection_radius - 0.9).abs() < 1e-15);
        assert_eq!(s.esc.sample_rate, 400.0);
        assert_eq!(s.esc.v_max, f64::INFINITY);
        assert_eq!(s.nav_mode, NavMode::Discovery { bootstrap_scale: 0.1 });
        assert_eq!(s.integration, Integration::continuous_default(40.0));
        assert_eq!(s.on_collision, CollisionPolicy::Stop);
    }
}
