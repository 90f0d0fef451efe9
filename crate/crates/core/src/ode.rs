//! Fixed-step classical Runge-Kutta.

use std::ops::{Add, Mul};

use crate::vec2::Vec2;

/// Anything that can be combined linearly by the integrator.
pub trait OdeState: Copy + Add<Output = Self> + Mul<f64, Output = Self> {}

impl<T> OdeState for T where T: Copy + Add<Output = T> + Mul<f64, Output = T> {}

/// One RK4 step of `y' = f(t, y)` from `(t, y)` with step `h`.
pub fn rk4_step<S, E>(
    mut f: impl FnMut(f64, S) -> Result<S, E>,
    t: f64,
    y: S,
    h: f64,
) -> Result<S, E>
where
    S: OdeState,
{
    let half = h / 2.0;
    let k1 = f(t, y)?;
    let k2 = f(t + half, y + k1 * half)?;
    let k3 = f(t + half, y + k2 * half)?;
    let k4 = f(t + h, y + k3 * h)?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Position plus washout state of the continuous loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopState {
    pub p: Vec2,
    pub eta: f64,
}

impl Add for LoopState {
    type Output = LoopState;
    fn add(self, rhs: LoopState) -> LoopState {
        LoopState {
            p: self.p + rhs.p,
            eta: self.eta + rhs.eta,
        }
    }
}

impl Mul<f64> for LoopState {
    type Output = LoopState;
    fn mul(self, rhs: f64) -> LoopState {
        LoopState {
            p: self.p * rhs,
            eta: self.eta * rhs,
        }
    }
}

/// Integrates an autonomous planar field on the grid `0, step, 2 step, ...`
/// up to `duration`, shortening the last step to land on `duration`.
pub fn integrate_field<E>(
    mut field: impl FnMut(Vec2) -> Result<Vec2, E>,
    start: Vec2,
    duration: f64,
    step: f64,
) -> Result<Vec<(f64, Vec2)>, E> {
    let n = steps(duration, step);
    let mut out = Vec::with_capacity(n + 1);
    let mut p = start;
    out.push((0.0, p));
    for i in 0..n {
        let t = i as f64 * step;
        let h = ((i + 1) as f64 * step).min(duration) - t;
        p = rk4_step(|_, y| field(y), t, p, h)?;
        out.push((t + h, p));
    }
    Ok(out)
}

/// Number of steps of length `step` needed to cover `duration`.
pub fn steps(duration: f64, step: f64) -> usize {
    if duration <= 0.0 {
        0
    } else {
        ((duration / step) - 1e-9).ceil().max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let exact = (-1.0f64).exp();
        let err = |h: f64| {
            let traj = integrate_field(|p: Vec2| Ok::<_, ()>(-p), Vec2::new(1.0, 0.0), 1.0, h).unwrap();
            (traj.last().unwrap().1.x - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn lands_on_duration() {
        let traj = integrate_field(|_| Ok::<_, ()>(Vec2::new(1.0, 0.0)), Vec2::ZERO, 1.05, 0.1).unwrap();
        assert_eq!(traj.len(), 12);
        let (t, p) = *traj.last().unwrap();
        assert!((t - 1.05).abs() < 1e-12);
        assert!((p.x - 1.05).abs() < 1e-12);
        assert_eq!(steps(0.0, 0.1), 0);
        assert_eq!(steps(1.0, 0.1), 10);
    }
}
