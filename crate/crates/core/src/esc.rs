//! Two-dimensional sinusoidal extremum seeking controller.
//!
//! The loop dithers the probe position with `alpha * z(omega t)`, where
//! `z(u) = (sin u, -cos u)`, washes out the slow part of the measurement with
//! the one-state filter `eta' = h (y - eta)`, and demodulates the residual
//! against the same dither:
//!
//! ```text
//! p'   = -C z(omega t) (y - eta)
//! eta' =  h (y - eta)
//! ```
//!
//! With `C > 0` this descends the measured field.

use crate::vec2::Vec2;

/// Controller parameters. Frequencies are in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscParams {
    pub omega: f64,
    pub alpha: f64,
    pub gain: f64,
    pub hpf_cutoff: f64,
    pub sample_rate: f64,
    pub v_max: f64,
}

/// Soft parameter-assumption violations worth reporting.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamWarning {
    /// The washout cutoff is not below the dither frequency.
    CutoffNotBelowDither { omega: f64, hpf_cutoff: f64 },
    /// The controller samples the dither below the Nyquist floor.
    BelowNyquist { sample_rate: f64, omega: f64 },
}

impl std::fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamWarning::CutoffNotBelowDither { omega, hpf_cutoff } => write!(
                f,
                "hpf cutoff {hpf_cutoff} rad/s is not below dither frequency {omega} rad/s"
            ),
            ParamWarning::BelowNyquist { sample_rate, omega } => write!(
                f,
                "sample rate {sample_rate} rad/s is below twice the dither frequency {omega} rad/s"
            ),
        }
    }
}

impl EscParams {
    /// Sample rate defaults to ten times the dither frequency.
    pub fn new(omega: f64, alpha: f64, gain: f64, hpf_cutoff: f64, v_max: f64) -> Self {
        EscParams {
            omega,
            alpha,
            gain,
            hpf_cutoff,
            sample_rate: 10.0 * omega,
            v_max,
        }
    }

    /// Controller tick length `2 pi / sample_rate`.
    pub fn tick(&self) -> f64 {
        std::f64::consts::TAU / self.sample_rate
    }

    /// Small parameter of the averaging argument, `alpha C / omega`.
    pub fn epsilon(&self) -> f64 {
        self.alpha * self.gain / self.omega
    }

    pub fn warnings(&self) -> Vec<ParamWarning> {
        let mut out = Vec::new();
        if !(self.omega > self.hpf_cutoff && self.hpf_cutoff > 0.0) {
            out.push(ParamWarning::CutoffNotBelowDither {
                omega: self.omega,
                hpf_cutoff: self.hpf_cutoff,
            });
        }
        if self.sample_rate < 2.0 * self.omega {
            out.push(ParamWarning::BelowNyquist {
                sample_rate: self.sample_rate,
                omega: self.omega,
            });
        }
        out
    }
}

/// Modulation vector `z(u) = (sin u, -cos u)`.
pub fn modulation(u: f64) -> Vec2 {
    let (s, c) = u.sin_cos();
    Vec2::new(s, -c)
}

/// Dither offset `alpha z(omega t)` added to the position to get the probe point.
pub fn perturbation(params: &EscParams, t: f64) -> Vec2 {
    modulation(params.omega * t) * params.alpha
}

/// Exact zero-order-hold update of the washout state over `dt` with the
/// measurement held at `measurement`.
pub fn hpf_step(eta: f64, measurement: f64, hpf_cutoff: f64, dt: f64) -> f64 {
    measurement + (eta - measurement) * (-hpf_cutoff * dt).exp()
}

/// Controller state owned by one simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscState {
    pub eta: f64,
    pub t: f64,
    pub last_command: Vec2,
}

/// Output of one sampled controller tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub velocity: Vec2,
    pub saturated: bool,
}

impl EscState {
    /// Filter state seeded with the first measurement so the initial residual is zero.
    pub fn new(first_measurement: f64, t: f64) -> Self {
        EscState {
            eta: first_measurement,
            t,
            last_command: Vec2::ZERO,
        }
    }

    /// One sampled tick: demodulate the residual against the pre-update filter
    /// state, clamp each axis to `v_max`, then advance the filter and clock.
    pub fn step(&mut self, measurement: f64, params: &EscParams, dt: f64) -> Command {
        let residual = measurement - self.eta;
        let raw = modulation(params.omega * self.t) * (-params.gain * residual);
        let velocity = raw.clamp_each(params.v_max);
        self.eta = hpf_step(self.eta, measurement, params.hpf_cutoff, dt);
        self.t += dt;
        self.last_command = velocity;
        Command {
            velocity,
            saturated: raw.max_abs() > params.v_max,
        }
    }
}

/// Right-hand side `(p', eta')` of the unsaturated continuous-time loop.
/// `measure(probe, t)` is evaluated at the dithered probe `p + alpha z(omega t)`.
pub fn continuous_rhs<E>(
    p: Vec2,
    eta: f64,
    t: f64,
    params: &EscParams,
    mut measure: impl FnMut(Vec2, f64) -> Result<f64, E>,
) -> Result<(Vec2, f64), E> {
    let z = modulation(params.omega * t);
    let residual = measure(p + z * params.alpha, t)? - eta;
    Ok((z * (-params.gain * residual), params.hpf_cutoff * residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_params() -> EscParams {
        EscParams::new(40.0, 0.07, 10.0, 20.0, f64::INFINITY)
    }

    #[test]
    fn perturbation_values() {
        let p = reference_params();
        assert_eq!(perturbation(&p, 0.0), Vec2::new(0.0, -0.07));
        let quarter = perturbation(&p, std::f64::consts::FRAC_PI_2 / 40.0);
        assert!((quarter.x - 0.07).abs() < 1e-15 && quarter.y.abs() < 1e-15);
        let v = perturbation(&p, 0.1);
        assert!((v.x - -0.05297617467155498).abs() < 1e-15);
        assert!((v.y - 0.04575505346045284).abs() < 1e-15);
    }

    #[test]
    fn hpf_fixed_point_and_half_life() {
        assert_eq!(hpf_step(0.7, 0.7, 20.0, 0.01), 0.7);
        let ln2 = std::f64::consts::LN_2;
        assert!((hpf_step(0.0, 1.0, 1.0, ln2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hpf_geometric_decay() {
        let (h, dt, y) = (20.0, 0.0157, 0.3);
        let mut eta = -1.0_f64;
        let mut prev_gap = (eta - y).abs();
        for _ in 0..50 {
            eta = hpf_step(eta, y, h, dt);
            let gap = (eta - y).abs();
            assert!((gap / prev_gap - (-h * dt).exp()).abs() < 1e-9);
            prev_gap = gap;
        }
    }

    #[test]
    fn zero_residual_gives_zero_command() {
        let mut s = EscState::new(0.4, 0.3);
        let cmd = s.step(0.4, &reference_params(), 0.01);
        assert_eq!(cmd.velocity.norm(), 0.0);
        assert!(!cmd.saturated);
    }

    #[test]
    fn command_by_hand() {
        let mut s = EscState::new(0.0, 0.0);
        let cmd = s.step(0.01, &reference_params(), 0.01);
        assert!(cmd.velocity.x.abs() < 1e-18);
        assert!((cmd.velocity.y - 0.1).abs() < 1e-15);
        assert!((s.t - 0.01).abs() < 1e-18);
        assert!(s.eta > 0.0 && s.eta < 0.01);
    }

    #[test]
    fn saturation_is_flagged() {
        let params = EscParams {
            v_max: 0.05,
            ..reference_params()
        };
        let mut s = EscState::new(0.0, 0.0);
        let cmd = s.step(0.01, &params, 0.01);
        assert!(cmd.saturated);
        assert_eq!(cmd.velocity.y, 0.05);
    }

    fn constant(v: f64) -> impl FnMut(Vec2, f64) -> Result<f64, ()> {
        move |_, _| Ok(v)
    }

    #[test]
    fn continuous_rhs_shape() {
        let p = reference_params();
        let (dp, deta) = continuous_rhs(Vec2::ZERO, 0.5, 1.234, &p, constant(0.5)).unwrap();
        assert_eq!((dp, deta), (Vec2::ZERO, 0.0));
        let (dp, deta) = continuous_rhs(Vec2::ZERO, 0.5, 0.0, &p, constant(0.6)).unwrap();
        assert_eq!(dp.x, 0.0);
        assert!(dp.y > 0.0);
        assert!((deta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_rhs_probes_the_dithered_point() {
        let p = reference_params();
        let mut seen = Vec2::ZERO;
        continuous_rhs(Vec2::new(1.0, 1.0), 0.0, 0.0, &p, |probe, _| -> Result<f64, ()> {
            seen = probe;
            Ok(0.0)
        })
        .unwrap();
        assert_eq!(seen, Vec2::new(1.0, 1.0 - 0.07));
    }

    // One RK4 step of the continuous loop against a sampled tick followed by an
    // Euler position update: both agree to second order in dt.
    #[test]
    fn continuous_matches_sampled_to_second_order() {
        let params = reference_params();
        let field = |q: Vec2, _t: f64| -> Result<f64, ()> { Ok(q.norm_squared()) };
        let p0 = Vec2::new(0.4, -0.3);
        let t0 = 0.37;
        let eta0 = 0.2;
        let measure_at = |t: f64| field(p0 + perturbation(&params, t), t).unwrap();

        let mut errors = Vec::new();
        for dt in [1e-5, 5e-6] {
            let rhs = |p: Vec2, eta: f64, t: f64| continuous_rhs(p, eta, t, &params, field).unwrap();
            let (k1p, k1e) = rhs(p0, eta0, t0);
            let (k2p, k2e) = rhs(p0 + k1p * (dt / 2.0), eta0 + k1e * dt / 2.0, t0 + dt / 2.0);
            let (k3p, k3e) = rhs(p0 + k2p * (dt / 2.0), eta0 + k2e * dt / 2.0, t0 + dt / 2.0);
            let (k4p, _) = rhs(p0 + k3p * dt, eta0 + k3e * dt, t0 + dt);
            let rk = p0 + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (dt / 6.0);

            let mut state = EscState::new(eta0, t0);
            let cmd = state.step(measure_at(t0), &params, dt);
            let euler = p0 + cmd.velocity * dt;
            errors.push(rk.distance(euler));
        }
        // Halving dt quarters the gap.
        assert!(errors[0] < 1e-8, "{errors:?}");
        let ratio = errors[0] / errors[1];
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn warnings_follow_assumptions() {
        assert!(reference_params().warnings().is_empty());
        let bad = EscParams {
            hpf_cutoff: 50.0,
            sample_rate: 60.0,
            ..reference_params()
        };
        assert_eq!(bad.warnings().len(), 2);
        assert!((reference_params().epsilon() - 0.0175).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn hpf_semigroup(eta in -2.0..2.0f64, y in -2.0..2.0f64, h in 0.1..50.0f64,
                         dt in 1e-4..0.2f64, n in 1usize..16) {
            let whole = hpf_step(eta, y, h, dt);
            let mut split = eta;
            for _ in 0..n {
                split = hpf_step(split, y, h, dt / n as f64);
            }
            prop_assert!((whole - split).abs() <= 1e-12);
        }

        #[test]
        fn command_stays_in_box(eta in -1.0..1.0f64, y in -1.0..1.0f64, t in 0.0..100.0f64,
                                gain in 0.0..500.0f64, v_max in 0.01..2.0f64) {
            let params = EscParams { gain, v_max, ..reference_params() };
            let mut s = EscState::new(eta, t);
            let cmd = s.step(y, &params, 0.01);
            prop_assert!(cmd.velocity.x.abs() <= v_max && cmd.velocity.y.abs() <= v_max);
        }
    }
}
