//! Platform-measuring experiment: a simulated participant sweeps a fingertip
//! along box platforms and the length is estimated from the contact events.

use serde::{Deserialize, Serialize};

use super::scenario::{FingertipPath, HandSource, MeshSpec, PlatformLayout, RenderMode, Scenario};
use super::sim::{simulate, ReplayOptions};
use super::HarnessError;
use crate::contact::ContactEvent;
use crate::geometry::Vec3;

pub const DEFAULT_LENGTHS: [f64; 5] = [0.2, 0.3, 0.4, 0.5, 0.6];
pub const PARTICIPANTS: usize = 6;

/// How independent trials are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when built with the `parallel` feature and falls
    /// back to sequential otherwise.
    #[default]
    Parallel,
}

impl Execution {
    pub fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.into_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => items.into_iter().map(f).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticipantModel {
    /// Sweep speed along the platform, m/s.
    pub speed: f64,
    /// Fingertip height above the platform top, m.
    pub hover: f64,
    /// Start distance before the near edge, m.
    pub lead_in: f64,
    /// Distance travelled past the far edge, m.
    pub lead_out: f64,
    /// Time the hand rests at the start before moving, s.
    pub start_time: f64,
    /// Simulated time after the sweep ends, s.
    pub settle: f64,
}

impl Default for ParticipantModel {
    fn default() -> Self {
        Self {
            speed: 0.1,
            hover: 0.005,
            lead_in: 0.12,
            lead_out: 0.05,
            start_time: 0.3,
            settle: 0.3,
        }
    }
}

impl ParticipantModel {
    pub fn path(&self, length: f64) -> Result<FingertipPath, HarnessError> {
        let z = PlatformLayout::TOP_Z + self.hover;
        let y = PlatformLayout::CENTER_Y;
        FingertipPath::new(
            vec![
                Vec3::new(-length / 2.0 - self.lead_in, y, z),
                Vec3::new(length / 2.0 + self.lead_out, y, z),
            ],
            self.speed,
            self.start_time,
        )
    }

    pub fn duration(&self, length: f64) -> f64 {
        self.start_time + (length + self.lead_in + self.lead_out) / self.speed + self.settle
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub lengths: Vec<f64>,
    pub trials: usize,
    pub mode: RenderMode,
    pub participant: ParticipantModel,
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(lengths: Vec<f64>, trials: usize, mode: RenderMode) -> Self {
        Self {
            lengths,
            trials,
            mode,
            participant: ParticipantModel::default(),
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.lengths.is_empty() || self.lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(HarnessError::Config("lengths must be positive".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("at least one trial per length".into()));
        }
        let p = &self.participant;
        if !(p.speed > 0.0 && p.hover >= 0.0 && p.lead_in >= 0.0 && p.lead_out >= 0.0) {
            return Err(HarnessError::Config(
                "participant speed must be positive, offsets non-negative".into(),
            ));
        }
        if !(p.start_time >= 0.0 && p.settle >= 0.0) {
            return Err(HarnessError::Config("participant times must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub mode: RenderMode,
    pub true_length_m: f64,
    pub trial: usize,
    pub participant: usize,
    pub seed: u64,
    pub estimated_m: f64,
    pub abs_error_m: f64,
    pub contact_events: Vec<ContactEvent>,
    pub max_desync_m: f64,
    pub mean_tick_s: Option<f64>,
}

impl TrialResult {
    pub fn signed_error_m(&self) -> f64 {
        self.estimated_m - self.true_length_m
    }
}

/// Length implied by the first onset and the last offset at sweep speed `v`;
/// zero without a complete contact.
pub fn estimate_length(events: &[ContactEvent], v: f64) -> f64 {
    let first = events.first().map(|e| e.onset);
    let last = events.iter().rev().find_map(|e| e.offset);
    match (first, last) {
        (Some(a), Some(b)) if b > a => v * (b - a),
        _ => 0.0,
    }
}

/// Seed of one trial, distinct per (base seed, length, trial).
pub fn trial_seed(base: u64, length_index: usize, trial: usize) -> u64 {
    // SplitMix64 finalizer over the packed indices
    let mut z =
        base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(((length_index as u64) << 32 | trial as u64) + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_trial(
    template: &Scenario,
    cfg: &ExperimentConfig,
    length_index: usize,
    trial: usize,
) -> Result<TrialResult, HarnessError> {
    let length = cfg.lengths[length_index];
    let seed = trial_seed(template.seed, length_index, trial);
    let mut scenario = template.clone();
    scenario.mesh = MeshSpec::Platform { length };
    scenario.mode = cfg.mode;
    scenario.seed = seed;
    scenario.duration = cfg.participant.duration(length);
    let mesh = scenario.mesh.build(std::path::Path::new("."))?;
    let hand = HandSource::Path(cfg.participant.path(length)?);
    let out = simulate(&scenario, &mesh, &hand, ReplayOptions::default())?;
    let m = out.metrics;
    let estimated = estimate_length(&m.contact_events, cfg.participant.speed);
    Ok(TrialResult {
        mode: cfg.mode,
        true_length_m: length,
        trial,
        participant: trial % PARTICIPANTS,
        seed,
        estimated_m: estimated,
        abs_error_m: (length - estimated).abs(),
        contact_events: m.contact_events,
        max_desync_m: m.max_desync_m,
        mean_tick_s: m.timing.map(|t| t.mean_tick_s),
    })
}

/// Runs every (length, trial) pair; results are ordered by length, then
/// trial, whatever the execution strategy.
pub fn run_experiment(template: &Scenario, cfg: &ExperimentConfig) -> Result<Vec<TrialResult>, HarnessError> {
    cfg.validate()?;
    template.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.lengths.len())
        .flat_map(|l| (0..cfg.trials).map(move |t| (l, t)))
        .collect();
    cfg.execution
        .map(jobs, |(l, t)| run_trial(template, cfg, l, t))
        .into_iter()
        .collect()
}
