use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use binharm::audio::wav_bytes;
use binharm::psychophysics::{trial_stimulus, StaircaseState, TrialRecord, MAX_LEVEL, MIN_LEVEL, START_LEVEL};
use binharm::stimulus::{ConditionSpec, TrialOptions, TrialStimulus};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingResponse,
    Finished,
    Aborted,
}

/// Server-side session. `target_position` belongs to the pending trial and is
/// never part of any client payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub spec: ConditionSpec,
    pub seed: u64,
    pub state: StaircaseState,
    pub log: Vec<TrialRecord>,
    /// Interval chosen on each answered trial.
    pub responses: Vec<usize>,
    pub status: Status,
    pub target_position: usize,
}

/// Result of one response, returned again for repeated identical posts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub trial: usize,
    pub choice: usize,
    pub correct: bool,
    pub status: Status,
    pub threshold: Option<f64>,
}

impl Session {
    pub fn new(id: String, spec: ConditionSpec, seed: u64) -> Result<Self, ServiceError> {
        spec.validate().map_err(|e| ServiceError::Validation(e.to_string()))?;
        let mut session = Self {
            id,
            spec,
            seed,
            state: StaircaseState::new(START_LEVEL),
            log: Vec::new(),
            responses: Vec::new(),
            status: Status::AwaitingResponse,
            target_position: 0,
        };
        session.target_position = session.pending_stimulus()?.target_position;
        Ok(session)
    }

    /// 1-based number of the trial awaiting a response.
    pub fn pending_trial(&self) -> Option<usize> {
        (self.status == Status::AwaitingResponse).then_some(self.state.trial_count + 1)
    }

    /// Level of the pending trial; server side only.
    pub fn pending_level(&self) -> f64 {
        self.state.current_level
    }

    pub fn threshold(&self) -> Option<f64> {
        self.state.threshold()
    }

    pub fn pending_stimulus(&self) -> Result<TrialStimulus, ServiceError> {
        trial_stimulus(&self.spec, self.state.current_level, self.seed, self.state.trial_count, TrialOptions::default())
            .map_err(ServiceError::internal)
    }

    fn feedback(&self, trial: usize) -> Feedback {
        let record = &self.log[trial - 1];
        let last = trial == self.log.len();
        Feedback {
            trial,
            choice: self.responses[trial - 1],
            correct: record.correct,
            status: if last { self.status } else { Status::AwaitingResponse },
            threshold: if last { self.threshold() } else { None },
        }
    }

    /// Scores `choice` for trial `trial` and advances the track. Re-posting
    /// the same choice for an answered trial returns the original feedback.
    pub fn respond(&mut self, trial: usize, choice: usize) -> Result<Feedback, ServiceError> {
        match choice {
            1 => {
                return Err(ServiceError::Validation(
                    "interval 1 is the reference and cannot be chosen".into(),
                ))
            }
            2 | 3 => {}
            _ => return Err(ServiceError::Validation(format!("choice must be 2 or 3, got {choice}"))),
        }
        if trial >= 1 && trial <= self.log.len() {
            return if self.responses[trial - 1] == choice {
                Ok(self.feedback(trial))
            } else {
                Err(ServiceError::Conflict(format!("trial {trial} was already answered differently")))
            };
        }
        let pending = self.pending_trial().ok_or_else(|| ServiceError::WrongState(self.status))?;
        if trial != pending {
            return Err(ServiceError::Conflict(format!("trial {trial} is not pending (pending: {pending})")));
        }
        let correct = choice == self.target_position + 2;
        let record = self.state.record(correct).map_err(ServiceError::internal)?;
        self.log.push(record);
        self.responses.push(choice);
        if self.state.terminated {
            self.status = Status::Finished;
        } else if !(MIN_LEVEL..=MAX_LEVEL).contains(&self.state.current_level) {
            self.status = Status::Aborted;
        } else {
            self.target_position = self.pending_stimulus()?.target_position;
        }
        Ok(self.feedback(trial))
    }

    /// WAV bytes of interval `interval` (1 to 3) of the pending trial.
    pub fn interval_wav(&self, trial: usize, interval: usize) -> Result<Vec<u8>, ServiceError> {
        let pending = self.pending_trial().ok_or_else(|| ServiceError::WrongState(self.status))?;
        if trial != pending {
            return Err(ServiceError::Conflict(format!("trial {trial} is not pending (pending: {pending})")));
        }
        let stimulus = self.pending_stimulus()?;
        let signal = stimulus
            .interval(interval)
            .ok_or_else(|| ServiceError::BadRequest(format!("interval must be 1, 2 or 3, got {interval}")))?;
        wav_bytes(signal).map_err(ServiceError::internal)
    }
}

/// In-memory sessions with optional JSON snapshots, one file per session.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Session>>,
    snapshot_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store persisting to `dir`; sessions already snapshotted there are
    /// loaded.
    pub fn with_snapshots(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let text = std::fs::read_to_string(&path)?;
                match serde_json::from_str::<Session>(&text) {
                    Ok(s) => {
                        sessions.insert(s.id.clone(), s);
                    }
                    Err(e) => tracing::warn!("skipping snapshot {}: {e}", path.display()),
                }
            }
        }
        Ok(Self { sessions: Mutex::new(sessions), snapshot_dir: Some(dir) })
    }

    fn persist(&self, session: &Session) -> Result<(), ServiceError> {
        let Some(dir) = &self.snapshot_dir else { return Ok(()) };
        write_snapshot(dir, session).map_err(ServiceError::internal)
    }

    pub fn insert(&self, session: Session) -> Result<Session, ServiceError> {
        self.persist(&session)?;
        self.sessions.lock().unwrap().insert(session.id.clone(), session.clone());
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Session, ServiceError> {
        self.sessions.lock().unwrap().get(id).cloned().ok_or(ServiceError::NotFound)
    }

    /// Runs `f` on the session under the store lock and snapshots the result.
    pub fn update<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let mut sessions = self.sessions.lock().unwrap();
        let session = sessions.get_mut(id).ok_or(ServiceError::NotFound)?;
        let out = f(session)?;
        self.persist(session)?;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn write_snapshot(dir: &Path, session: &Session) -> std::io::Result<()> {
    let tmp = dir.join(format!("{}.json.tmp", session.id));
    std::fs::write(&tmp, serde_json::to_vec_pretty(session)?)?;
    std::fs::rename(tmp, dir.join(format!("{}.json", session.id)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> Session {
        Session::new("s".into(), ConditionSpec::new(40.0, 0.0, 8, false), 3).unwrap()
    }

    #[test]
    fn two_correct_lower_the_level() {
        let mut s = session();
        for n in 1..=2 {
            let choice = s.target_position + 2;
            assert!(s.respond(n, choice).unwrap().correct);
        }
        assert_eq!(s.pending_level(), 60.0);
        assert_eq!(s.pending_trial(), Some(3));
    }

    #[test]
    fn reference_cannot_be_chosen() {
        let mut s = session();
        assert!(matches!(s.respond(1, 1), Err(ServiceError::Validation(_))));
        assert!(matches!(s.respond(1, 4), Err(ServiceError::Validation(_))));
        assert_eq!(s.pending_trial(), Some(1));
    }

    #[test]
    fn responses_are_idempotent_by_trial() {
        let mut s = session();
        let first = s.respond(1, 2).unwrap();
        assert_eq!(s.respond(1, 2).unwrap(), first);
        assert!(matches!(s.respond(1, 3), Err(ServiceError::Conflict(_))));
        assert!(matches!(s.respond(5, 2), Err(ServiceError::Conflict(_))));
        assert_eq!(s.log.len(), 1);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let spec = ConditionSpec::new(40.0, 0.0, 7, false);
        assert!(matches!(Session::new("x".into(), spec, 1), Err(ServiceError::Validation(_))));
    }

    #[test]
    fn snapshots_reload() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::with_snapshots(dir.path()).unwrap();
        store.insert(session()).unwrap();
        store.update("s", |s| s.respond(1, 3)).unwrap();
        let reloaded = SessionStore::with_snapshots(dir.path()).unwrap();
        assert_eq!(reloaded.get("s").unwrap(), store.get("s").unwrap());
    }
}
