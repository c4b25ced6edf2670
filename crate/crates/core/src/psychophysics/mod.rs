//! Adaptive 3-interval, 2-alternative forced-choice tracking.
//!
//! Interval 1 is always the masker-only reference and can never be chosen.
//! The level follows a 1-up/2-down rule starting at 65 dB SPL with 5-dB
//! steps, 2 dB after the second and 1 dB after the fourth reversal; a run ends
//! after eight reversals at 1 dB and its threshold is the mean level of those
//! reversals.

mod observer;
mod staircase;
mod track;

pub use observer::{
    simulated_observer, AlwaysCorrect, LogisticObserver, ModelObserver, Observer, Presentation,
    RandomObserver, ThresholdObserver,
};
pub use staircase::{
    staircase_step, Direction, Reversal, StaircaseState, TrialRecord, FINAL_REVERSALS, START_LEVEL, STEPS,
};
pub use track::{
    run_condition, run_seed, run_track, trial_stimulus, trial_stream, write_track_log, ThresholdResult,
    TrackResult, MAX_LEVEL, MIN_LEVEL, RUNS_PER_THRESHOLD,
};
