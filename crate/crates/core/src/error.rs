use thiserror::Error;

use crate::vec2::Vec2;

/// Evaluation of the navigation function outside its domain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    /// The point lies inside a known inflated obstacle or outside the workspace.
    #[error("point {p} is outside the known free space (obstacle product {beta})")]
    OutsideFreeSpace { p: Vec2, beta: f64 },
    /// `f0^k + beta` is not positive, so the gradient is undefined.
    #[error("navigation function denominator vanishes at {p}")]
    DegenerateDenominator { p: Vec2 },
}

/// Violations of world geometry invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("workspace radius must be positive and finite, got {0}")]
    WorkspaceRadius(f64),
    #[error("inflation must be non-negative and finite, got {0}")]
    Inflation(f64),
    #[error("obstacle {id}: radius must be positive and finite, got {radius}")]
    ObstacleRadius { id: u32, radius: f64 },
    #[error("obstacle {id}: center {center} is not finite")]
    ObstacleCenter { id: u32, center: Vec2 },
    #[error("duplicate obstacle id {0}")]
    DuplicateId(u32),
    #[error("obstacles {a} and {b} intersect after inflation")]
    Intersecting { a: u32, b: u32 },
    #[error("obstacle {0} is not strictly inside the workspace after inflation")]
    OutsideWorkspace(u32),
}

/// Scenario ingestion and validation failures.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("unknown bundled scenario `{0}`")]
    UnknownBundled(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Failures that abort a simulation run before or during integration.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("start point {0} is not in free space with respect to the inflated obstacles")]
    StartNotFree(Vec2),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Oracle failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("trajectories share no samples after the initial layer")]
    EmptyOverlap,
    #[error("the repulsion check needs an order parameter k >= 1")]
    NeedsPositiveOrder,
    #[error(transparent)]
    Domain(#[from] DomainError),
}
