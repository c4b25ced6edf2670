use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const START_LEVEL: f64 = 65.0;
/// Step sizes in dB; the step shrinks after the 2nd and the 4th reversal.
pub const STEPS: [f64; 3] = [5.0, 2.0, 1.0];
const STEP_CHANGE_AFTER: [usize; 2] = [2, 4];
pub const FINAL_REVERSALS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reversal {
    pub trial: usize,
    pub level: f64,
    /// Step size in force when the reversal happened.
    pub step: f64,
}

/// What happened on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub level: f64,
    pub correct: bool,
    pub step: f64,
    pub reversal: bool,
}

/// 1-up/2-down adaptive track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseState {
    pub current_level: f64,
    pub step: f64,
    pub consecutive_correct: u32,
    pub reversals: Vec<Reversal>,
    pub trial_count: usize,
    pub last_direction: Direction,
    pub terminated: bool,
}

impl Default for StaircaseState {
    fn default() -> Self {
        Self::new(START_LEVEL)
    }
}

impl StaircaseState {
    pub fn new(start_level: f64) -> Self {
        Self {
            current_level: start_level,
            step: STEPS[0],
            consecutive_correct: 0,
            reversals: Vec::new(),
            trial_count: 0,
            last_direction: Direction::None,
            terminated: false,
        }
    }

    fn step_for(reversal_count: usize) -> f64 {
        if reversal_count >= STEP_CHANGE_AFTER[1] {
            STEPS[2]
        } else if reversal_count >= STEP_CHANGE_AFTER[0] {
            STEPS[1]
        } else {
            STEPS[0]
        }
    }

    /// Reversals that happened while the final (1 dB) step was in force.
    pub fn final_step_reversals(&self) -> usize {
        self.reversals.iter().filter(|r| r.step == STEPS[2]).count()
    }

    /// Scores one response and moves the level. The step is updated before
    /// the move when the response causes a reversal.
    pub fn record(&mut self, correct: bool) -> Result<TrialRecord> {
        if self.terminated {
            return Err(Error::TrackTerminated);
        }
        let trial = self.trial_count;
        let level = self.current_level;
        let step_in_force = self.step;

        let movement = if correct {
            self.consecutive_correct += 1;
            if self.consecutive_correct == 2 {
                self.consecutive_correct = 0;
                Some(Direction::Down)
            } else {
                None
            }
        } else {
            self.consecutive_correct = 0;
            Some(Direction::Up)
        };

        let mut reversal = false;
        if let Some(dir) = movement {
            if self.last_direction != Direction::None && self.last_direction != dir {
                reversal = true;
                self.reversals.push(Reversal { trial, level, step: self.step });
                self.step = Self::step_for(self.reversals.len());
                if self.final_step_reversals() >= FINAL_REVERSALS {
                    self.terminated = true;
                }
            }
            self.last_direction = dir;
            match dir {
                Direction::Up => self.current_level += self.step,
                Direction::Down => self.current_level -= self.step,
                Direction::None => {}
            }
        }
        self.trial_count += 1;
        Ok(TrialRecord { trial, level, correct, step: step_in_force, reversal })
    }

    /// Mean level of the last eight reversals, once the track has terminated.
    pub fn threshold(&self) -> Option<f64> {
        if !self.terminated {
            return None;
        }
        let last = &self.reversals[self.reversals.len() - FINAL_REVERSALS..];
        Some(last.iter().map(|r| r.level).sum::<f64>() / FINAL_REVERSALS as f64)
    }
}

/// Functional form of [`StaircaseState::record`].
pub fn staircase_step(state: &StaircaseState, correct: bool) -> Result<StaircaseState> {
    let mut next = state.clone();
    next.record(correct)?;
    Ok(next)
}
