//! Source seeking from scalar potential measurements in disc worlds.
//!
//! An agent measures a quadratic source potential, folds it together with the
//! obstacles it knows about into a Rimon-Koditschek navigation function, and
//! descends that function with a sinusoidal extremum seeking loop. The
//! [`oracle`] module holds the independent reference computations (exact and
//! averaged gradient flows, finite differences, boundary repulsion) used to
//! check the closed loop.

pub mod batch;
pub mod error;
pub mod esc;
pub mod export;
pub mod ode;
pub mod oracle;
pub mod potential;
pub mod scenario;
pub mod sim;
pub mod validate;
pub mod vec2;
pub mod world;

pub use error::{DomainError, OracleError, ScenarioError, SimError, WorldError};
pub use esc::{EscParams, EscState};
pub use potential::{NavFunction, OrderMode, SourcePotential, Waypoint};
pub use sim::Scenario;
pub use sim::{run, Event, EventKind, RunOutput, Summary, TrajectorySample};
pub use vec2::Vec2;
pub use world::{Obstacle, World};
