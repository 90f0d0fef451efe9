//! Parameter sweeps: one independent run per value on a worker pool.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{ScenarioError, SimError};
use crate::sim::{run, Scenario, Summary};

/// Scenario parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Omega,
    Alpha,
    Gain,
    HpfCutoff,
    SampleRate,
    VMax,
    Inflation,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::Omega,
        SweepParam::Alpha,
        SweepParam::Gain,
        SweepParam::HpfCutoff,
        SweepParam::SampleRate,
        SweepParam::VMax,
        SweepParam::Inflation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Omega => "omega",
            SweepParam::Alpha => "alpha",
            SweepParam::Gain => "gain",
            SweepParam::HpfCutoff => "hpf_cutoff",
            SweepParam::SampleRate => "sample_rate",
            SweepParam::VMax => "v_max",
            SweepParam::Inflation => "inflation",
        }
    }

    /// Copy of `scenario` with this parameter set to `value`. Other
    /// parameters, including a sample rate derived from omega, are left alone.
    pub fn apply(self, scenario: &Scenario, value: f64) -> Result<Scenario, ScenarioError> {
        let mut s = scenario.clone();
        let positive = || {
            if value.is_finite() && value > 0.0 {
                Ok(value)
            } else {
                Err(ScenarioError::invalid(self.name(), format!("must be positive and finite, got {value}")))
            }
        };
        match self {
            SweepParam::Omega => s.esc.omega = positive()?,
            SweepParam::Alpha => s.esc.alpha = positive()?,
            SweepParam::Gain => {
                if !value.is_finite() || value < 0.0 {
                    return Err(ScenarioError::invalid("gain", format!("must be non-negative, got {value}")));
                }
                s.esc.gain = value;
            }
            SweepParam::HpfCutoff => s.esc.hpf_cutoff = positive()?,
            SweepParam::SampleRate => s.esc.sample_rate = positive()?,
            SweepParam::VMax => s.esc.v_max = positive()?,
            SweepParam::Inflation => s.world = s.world.with_inflation(value)?,
        }
        Ok(s)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownParam(pub String);

impl fmt::Display for UnknownParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = SweepParam::ALL.iter().map(|p| p.name()).collect();
        write!(f, "unknown sweep parameter {:?}, expected one of {}", self.0, names.join(", "))
    }
}

impl std::error::Error for UnknownParam {}

impl FromStr for SweepParam {
    type Err = UnknownParam;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownParam(s.to_string()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<Summary, SweepError>,
}

/// Runs the scenario once per value. Rows come back in input order. With
/// `threads` set, the pool is capped at that many workers.
pub fn sweep(scenario: &Scenario, param: SweepParam, values: &[f64], threads: Option<usize>) -> Vec<SweepRow> {
    let one = |&value: &f64| SweepRow {
        value,
        outcome: param
            .apply(scenario, value)
            .map_err(SweepError::from)
            .and_then(|s| run(&s).map(|out| out.summary).map_err(SweepError::from)),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    match builder.build() {
        Ok(pool) => pool.install(|| values.par_iter().map(one).collect()),
        Err(_) => values.iter().map(one).collect(),
    }
}

/// Smallest grid value from which every larger value in the sweep is
/// collision free. `None` when the largest value still collides or a run
/// failed above it.
pub fn collision_free_threshold(rows: &[SweepRow]) -> Option<f64> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut threshold = None;
    for row in sorted.iter().rev() {
        match &row.outcome {
            Ok(s) if !s.collided => threshold = Some(row.value),
            _ => break,
        }
    }
    threshold
}
