//! Workspace and obstacle geometry.
//!
//! Every obstacle is a disc described by the convex function
//! `beta_i(p) = |p - c_i|^2 - r_eff^2`, negative inside the inflated disc.
//! The bounded workspace contributes the factor `beta_0(p) = R_0^2 - |p - c_0|^2`,
//! so the product `beta = beta_0 * prod_i beta_i` is non-negative exactly on
//! the (inflated) free space.

use std::collections::BTreeSet;

use crate::error::WorldError;
use crate::vec2::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub id: u32,
    pub center: Vec2,
    pub radius: f64,
    pub inflation: f64,
}

impl Obstacle {
    pub fn new(id: u32, center: Vec2, radius: f64) -> Self {
        Obstacle {
            id,
            center,
            radius,
            inflation: 0.0,
        }
    }

    pub fn effective_radius(&self) -> f64 {
        self.radius + self.inflation
    }

    /// `|p - c|^2 - r_eff^2`.
    pub fn beta(&self, p: Vec2) -> f64 {
        let r = self.effective_radius();
        (p - self.center).norm_squared() - r * r
    }

    pub fn grad_beta(&self, p: Vec2) -> Vec2 {
        (p - self.center) * 2.0
    }

    /// Signed distance to the true (uninflated) disc.
    pub fn clearance(&self, p: Vec2) -> f64 {
        p.distance(self.center) - self.radius
    }
}

/// Which constraint is closest to being violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Workspace,
    Obstacle(u32),
}

/// Result of a free-space membership test against the uninflated geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpaceCheck {
    pub free: bool,
    pub clearance: f64,
    pub nearest: Constraint,
}

/// An immutable disc world. Obstacles are kept sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    workspace_center: Vec2,
    workspace_radius: f64,
    inflation: f64,
    obstacles: Vec<Obstacle>,
}

impl World {
    /// Builds a world, applying `inflation` to every obstacle and checking
    /// that inflated obstacles are pairwise disjoint and inside the workspace.
    pub fn new(
        workspace_center: Vec2,
        workspace_radius: f64,
        inflation: f64,
        obstacles: impl IntoIterator<Item = Obstacle>,
    ) -> Result<Self, WorldError> {
        if !(workspace_radius.is_finite() && workspace_radius > 0.0) || !workspace_center.is_finite()
        {
            return Err(WorldError::WorkspaceRadius(workspace_radius));
        }
        if !(inflation.is_finite() && inflation >= 0.0) {
            return Err(WorldError::Inflation(inflation));
        }
        let mut obstacles: Vec<Obstacle> = obstacles
            .into_iter()
            .map(|o| Obstacle { inflation, ..o })
            .collect();
        obstacles.sort_by_key(|o| o.id);

        for o in &obstacles {
            if !(o.radius.is_finite() && o.radius > 0.0) {
                return Err(WorldError::ObstacleRadius {
                    id: o.id,
                    radius: o.radius,
                });
            }
            if !o.center.is_finite() {
                return Err(WorldError::ObstacleCenter {
                    id: o.id,
                    center: o.center,
                });
            }
            if o.center.distance(workspace_center) + o.effective_radius() >= workspace_radius {
                return Err(WorldError::OutsideWorkspace(o.id));
            }
        }
        for (i, a) in obstacles.iter().enumerate() {
            for b in &obstacles[i + 1..] {
                if a.id == b.id {
                    return Err(WorldError::DuplicateId(a.id));
                }
                if a.center.distance(b.center) <= a.effective_radius() + b.effective_radius() {
                    return Err(WorldError::Intersecting { a: a.id, b: b.id });
                }
            }
        }

        Ok(World {
            workspace_center,
            workspace_radius,
            inflation,
            obstacles,
        })
    }

    /// Same geometry with a different inflation margin.
    pub fn with_inflation(&self, inflation: f64) -> Result<Self, WorldError> {
        World::new(
            self.workspace_center,
            self.workspace_radius,
            inflation,
            self.obstacles.iter().cloned(),
        )
    }

    pub fn workspace_center(&self) -> Vec2 {
        self.workspace_center
    }

    pub fn workspace_radius(&self) -> f64 {
        self.workspace_radius
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn obstacle(&self, id: u32) -> Option<&Obstacle> {
        self.obstacles
            .binary_search_by_key(&id, |o| o.id)
            .ok()
            .map(|i| &self.obstacles[i])
    }

    pub fn ids(&self) -> BTreeSet<u32> {
        self.obstacles.iter().map(|o| o.id).collect()
    }

    /// `R_0^2 - |p - c_0|^2`.
    pub fn beta_workspace(&self, p: Vec2) -> f64 {
        self.workspace_radius * self.workspace_radius - (p - self.workspace_center).norm_squared()
    }

    pub fn grad_beta_workspace(&self, p: Vec2) -> Vec2 {
        (p - self.workspace_center) * -2.0
    }

    fn known<'a>(&'a self, known: &'a BTreeSet<u32>) -> impl Iterator<Item = &'a Obstacle> + 'a {
        self.obstacles.iter().filter(move |o| known.contains(&o.id))
    }

    /// Product of the workspace factor and the factors of the known obstacles,
    /// evaluated workspace first and then in ascending id order.
    pub fn beta_product(&self, known: &BTreeSet<u32>, p: Vec2) -> f64 {
        self.known(known)
            .fold(self.beta_workspace(p), |acc, o| acc * o.beta(p))
    }

    /// Product-rule gradient of [`World::beta_product`].
    pub fn grad_beta_product(&self, known: &BTreeSet<u32>, p: Vec2) -> Vec2 {
        // Running (value, gradient) of the partial product.
        let (_, grad) = self.known(known).fold(
            (self.beta_workspace(p), self.grad_beta_workspace(p)),
            |(value, grad), o| {
                let b = o.beta(p);
                (value * b, grad * b + o.grad_beta(p) * value)
            },
        );
        grad
    }

    /// Collision test against the uninflated obstacles and the workspace wall.
    pub fn in_free_space(&self, p: Vec2) -> FreeSpaceCheck {
        let mut clearance = self.workspace_radius - p.distance(self.workspace_center);
        let mut nearest = Constraint::Workspace;
        for o in &self.obstacles {
            let c = o.clearance(p);
            if c < clearance {
                clearance = c;
                nearest = Constraint::Obstacle(o.id);
            }
        }
        FreeSpaceCheck {
            free: clearance >= 0.0,
            clearance,
            nearest,
        }
    }

    /// First constraint strictly violated by `p` (uninflated geometry).
    pub fn violated(&self, p: Vec2) -> Option<Constraint> {
        if p.distance(self.workspace_center) > self.workspace_radius {
            return Some(Constraint::Workspace);
        }
        self.obstacles
            .iter()
            .find(|o| p.distance(o.center) < o.radius)
            .map(|o| Constraint::Obstacle(o.id))
    }

    /// True when `p` is inside the workspace and outside every inflated obstacle.
    pub fn in_inflated_free_space(&self, p: Vec2) -> bool {
        self.beta_workspace(p) >= 0.0 && self.obstacles.iter().all(|o| o.beta(p) >= 0.0)
    }

    /// Axis-aligned bounding box of the workspace disc.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let r = Vec2::new(self.workspace_radius, self.workspace_radius);
        (self.workspace_center - r, self.workspace_center + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty(radius: f64) -> World {
        World::new(Vec2::ZERO, radius, 0.0, []).unwrap()
    }

    fn reference_world() -> World {
        crate::scenario::particle_world(0.0)
    }

    #[test]
    fn workspace_factor() {
        let w = empty(3.0);
        assert_eq!(w.beta_workspace(Vec2::ZERO), 9.0);
        assert_eq!(w.beta_workspace(Vec2::new(3.0, 0.0)), 0.0);
        assert_eq!(w.beta_workspace(Vec2::new(0.0, 2.5)), 2.75);
        assert!(w.beta_workspace(Vec2::new(0.0, 3.1)) < 0.0);
    }

    #[test]
    fn obstacle_factor() {
        let o = Obstacle::new(0, Vec2::new(-1.0, 0.0), 0.25);
        assert_eq!(o.beta(Vec2::new(-1.0, 0.0)), -0.0625);
        assert_eq!(o.beta(Vec2::new(-0.75, 0.0)), 0.0);
        assert_eq!(o.beta(Vec2::ZERO), 0.9375);
    }

    #[test]
    fn empty_product_is_workspace() {
        let w = reference_world();
        let p = Vec2::new(0.4, -0.3);
        assert_eq!(w.beta_product(&BTreeSet::new(), p), w.beta_workspace(p));
    }

    #[test]
    fn product_vanishes_on_known_boundary() {
        let w = reference_world();
        let known = BTreeSet::from([0]);
        assert_eq!(w.beta_product(&known, Vec2::new(-0.75, 0.0)), 0.0);
    }

    #[test]
    fn product_matches_factor_by_factor() {
        let w = reference_world();
        let p = Vec2::new(0.0, 2.5);
        // beta_0 = 2.75; obstacle factors by hand.
        let expected = 2.75
            * (1.0 + 6.25 - 0.0625)
            * (0.04 + 1.69 - 0.0625)
            * (1.0 + 3.24 - 0.0625)
            * (1.0 + 12.25 - 0.0625)
            * (0.25 + 12.25 - 0.0625);
        let got = w.beta_product(&w.ids(), p);
        assert!((got - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn gradient_at_workspace_center() {
        let w = empty(3.0);
        assert_eq!(w.grad_beta_product(&BTreeSet::new(), Vec2::ZERO), Vec2::ZERO);
    }

    #[test]
    fn gradient_by_hand_product_rule() {
        let w = World::new(
            Vec2::ZERO,
            3.0,
            0.0,
            [Obstacle::new(1, Vec2::new(1.0, 0.0), 0.5)],
        )
        .unwrap();
        let g = w.grad_beta_product(&BTreeSet::from([1]), Vec2::new(2.0, 0.0));
        assert_eq!(g, Vec2::new(7.0, 0.0));
    }

    #[test]
    fn free_space_membership() {
        let w = empty(3.0);
        let c = w.in_free_space(Vec2::ZERO);
        assert!(c.free);
        assert_eq!(c.clearance, 3.0);

        let w = reference_world();
        let c = w.in_free_space(Vec2::new(-1.0, 0.0));
        assert!(!c.free);
        assert_eq!(c.clearance, -0.25);
        assert_eq!(c.nearest, Constraint::Obstacle(0));

        let c = w.in_free_space(Vec2::new(0.0, 2.5));
        assert!(c.free);
        assert!((c.clearance - 0.5).abs() < 1e-12);
        assert_eq!(c.nearest, Constraint::Workspace);
    }

    #[test]
    fn rejects_bad_geometry() {
        let overlapping = [
            Obstacle::new(0, Vec2::ZERO, 0.5),
            Obstacle::new(1, Vec2::new(0.9, 0.0), 0.5),
        ];
        assert_eq!(
            World::new(Vec2::ZERO, 3.0, 0.0, overlapping),
            Err(WorldError::Intersecting { a: 0, b: 1 })
        );
        // Disjoint without inflation, intersecting with it.
        let close = [
            Obstacle::new(0, Vec2::ZERO, 0.4),
            Obstacle::new(1, Vec2::new(0.9, 0.0), 0.4),
        ];
        assert!(World::new(Vec2::ZERO, 3.0, 0.0, close.clone()).is_ok());
        assert!(World::new(Vec2::ZERO, 3.0, 0.1, close).is_err());
        assert_eq!(
            World::new(Vec2::ZERO, 1.0, 0.0, [Obstacle::new(3, Vec2::new(0.8, 0.0), 0.25)]),
            Err(WorldError::OutsideWorkspace(3))
        );
        assert!(World::new(Vec2::ZERO, -1.0, 0.0, []).is_err());
        assert_eq!(
            World::new(Vec2::ZERO, 3.0, 0.0, [Obstacle::new(0, Vec2::ZERO, 0.0)]),
            Err(WorldError::ObstacleRadius { id: 0, radius: 0.0 })
        );
    }

    #[test]
    fn obstacles_sorted_by_id() {
        let w = World::new(
            Vec2::ZERO,
            3.0,
            0.0,
            [
                Obstacle::new(4, Vec2::new(1.0, 0.0), 0.2),
                Obstacle::new(2, Vec2::new(-1.0, 0.0), 0.2),
            ],
        )
        .unwrap();
        let ids: Vec<u32> = w.obstacles().iter().map(|o| o.id).collect();
        assert_eq!(ids, vec![2, 4]);
        assert_eq!(w.obstacle(4).unwrap().center, Vec2::new(1.0, 0.0));
    }
}
