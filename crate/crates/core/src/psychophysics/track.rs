use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::observer::{Observer, Presentation};
use super::staircase::{StaircaseState, TrialRecord, START_LEVEL};
use crate::error::{Error, Result};
use crate::model::PathwayConfig;
use crate::rng::{derive_seed, stream, SimRng};
use crate::stimulus::{assemble_trial, ConditionSpec, TrialOptions, TrialStimulus};

/// Tracks that leave [MIN_LEVEL, MAX_LEVEL] dB SPL are aborted.
pub const MAX_LEVEL: f64 = 100.0;
pub const MIN_LEVEL: f64 = -40.0;
pub const RUNS_PER_THRESHOLD: usize = 5;

const TRIAL_STREAM: u64 = 0x7121;
const OBSERVER_STREAM: u64 = 0x0b5e;
const RUN_STREAM: u64 = 0x2a1;

/// Random stream used to synthesize trial `trial` (0-based) of a track or
/// listening session with the given seed.
pub fn trial_stream(seed: u64, trial: usize) -> SimRng {
    stream(seed, &[TRIAL_STREAM, trial as u64])
}

/// The stimulus of trial `trial` at `level`; shared by simulated tracks,
/// `synth` and the listening service so all three produce identical audio.
pub fn trial_stimulus(
    spec: &ConditionSpec,
    level: f64,
    seed: u64,
    trial: usize,
    options: TrialOptions,
) -> Result<TrialStimulus> {
    assemble_trial(spec, level, options, &mut trial_stream(seed, trial))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub threshold: f64,
    pub log: Vec<TrialRecord>,
    pub state: StaircaseState,
}

/// Runs one adaptive track from 65 dB SPL until eight reversals at the
/// 1-dB step have been collected.
pub fn run_track<O: Observer + ?Sized>(
    spec: &ConditionSpec,
    observer: &mut O,
    options: TrialOptions,
    seed: u64,
) -> Result<TrackResult> {
    spec.validate()?;
    let mut state = StaircaseState::new(START_LEVEL);
    let mut observer_rng = stream(seed, &[OBSERVER_STREAM]);
    let mut log = Vec::new();
    while !state.terminated {
        let level = state.current_level;
        let stimulus = trial_stimulus(spec, level, seed, state.trial_count, options)?;
        let choice = observer.choose(&Presentation { level, stimulus: &stimulus }, &mut observer_rng)?;
        if choice != 2 && choice != 3 {
            return Err(Error::InvalidParameter(format!("observer chose interval {choice}")));
        }
        log.push(state.record(choice == stimulus.target_interval())?);
        if !state.terminated && !(MIN_LEVEL..=MAX_LEVEL).contains(&state.current_level) {
            return Err(Error::LevelOutOfBounds { level: state.current_level, trials: state.trial_count });
        }
    }
    let threshold = state.threshold().expect("terminated track has a threshold");
    Ok(TrackResult { threshold, log, state })
}

/// Threshold estimate for one condition: the mean of several tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub condition: ConditionSpec,
    pub pathway: Option<PathwayConfig>,
    pub per_run_thresholds: Vec<f64>,
    pub mean_threshold: f64,
    /// Mean threshold relative to the masker level, dB.
    pub relative_threshold: f64,
}

impl ThresholdResult {
    pub fn from_runs(condition: ConditionSpec, pathway: Option<PathwayConfig>, runs: Vec<f64>) -> Self {
        let mean = runs.iter().sum::<f64>() / runs.len() as f64;
        Self {
            relative_threshold: mean - condition.masker_level,
            condition,
            pathway,
            per_run_thresholds: runs,
            mean_threshold: mean,
        }
    }
}

/// Seed of run `run` within a condition evaluation seeded with `seed`.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    derive_seed(seed, &[RUN_STREAM, run as u64])
}

/// `n_runs` independent tracks (in parallel), averaged.
pub fn run_condition<O>(
    spec: &ConditionSpec,
    observer: &O,
    pathway: Option<PathwayConfig>,
    n_runs: usize,
    options: TrialOptions,
    seed: u64,
) -> Result<ThresholdResult>
where
    O: Observer + Clone + Send + Sync,
{
    if n_runs == 0 {
        return Err(Error::InvalidParameter("at least one run is required".into()));
    }
    let runs = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let mut obs = observer.clone();
            run_track(spec, &mut obs, options, run_seed(seed, run)).map(|t| t.threshold)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdResult::from_runs(spec.clone(), pathway, runs))
}

/// Per-trial CSV log: trial, level, correct, step, reversal.
pub fn write_track_log<W: Write>(mut out: W, log: &[TrialRecord]) -> Result<()> {
    writeln!(out, "trial,level_db,correct,step_db,reversal")?;
    for r in log {
        writeln!(out, "{},{},{},{},{}", r.trial + 1, r.level, r.correct as u8, r.step, r.reversal as u8)?;
    }
    Ok(())
}
