use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use binharm::audio::wav_bytes;
use binharm::psychophysics::TrialRecord;
use binharm::rng::stream;
use binharm::stimulus::{background_noise, ConditionSpec, SAMPLE_RATE};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::session::{Feedback, Session, SessionStore, Status};

pub const DEFAULT_ISI_MS: u32 = 300;
const NOISE_LOOP_SECONDS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    /// Gap the client leaves between intervals, ms.
    pub isi_ms: u32,
    pub snapshot_dir: Option<PathBuf>,
    /// Seed of the looping background-noise track.
    pub noise_seed: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { isi_ms: DEFAULT_ISI_MS, snapshot_dir: None, noise_seed: 0 }
    }
}

pub struct AppState {
    pub store: SessionStore,
    pub config: ServiceConfig,
    noise_wav: Vec<u8>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        let store = match &config.snapshot_dir {
            Some(dir) => SessionStore::with_snapshots(dir).map_err(ServiceError::internal)?,
            None => SessionStore::new(),
        };
        let noise = background_noise(NOISE_LOOP_SECONDS, SAMPLE_RATE, &mut stream(config.noise_seed, &[]))
            .map_err(ServiceError::internal)?;
        let noise_wav = wav_bytes(&noise).map_err(ServiceError::internal)?;
        Ok(Self { store, config, noise_wav })
    }
}

fn default_f0() -> f64 {
    40.0
}

fn default_components() -> usize {
    8
}

/// Body of `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRequest {
    #[serde(default = "default_f0")]
    pub f0: f64,
    /// Mistuning in percent.
    #[serde(default)]
    pub mistuning: f64,
    #[serde(default = "default_components")]
    pub n_components: usize,
    #[serde(default)]
    pub dichotic: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDescriptor {
    pub trial: usize,
    /// Audio URLs of intervals 1, 2 and 3, in playback order.
    pub intervals: [String; 3],
    pub isi_ms: u32,
    pub choices: [usize; 2],
}

/// Client view of a session. Levels and the trial log are only included once
/// the track has ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub status: Status,
    pub condition: ConditionSpec,
    pub trials_completed: usize,
    pub reversals: usize,
    pub trial: Option<TrialDescriptor>,
    pub threshold: Option<f64>,
    pub log: Option<Vec<TrialRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRequest {
    pub trial: usize,
    pub choice: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseView {
    #[serde(flatten)]
    pub feedback: Feedback,
    pub next_trial: Option<TrialDescriptor>,
}

fn descriptor(session: &Session, isi_ms: u32) -> Option<TrialDescriptor> {
    let n = session.pending_trial()?;
    Some(TrialDescriptor {
        trial: n,
        intervals: [1, 2, 3].map(|k| format!("/sessions/{}/trial/{n}/interval/{k}.wav", session.id)),
        isi_ms,
        choices: [2, 3],
    })
}

fn view(session: &Session, isi_ms: u32) -> SessionView {
    let ended = session.status != Status::AwaitingResponse;
    SessionView {
        id: session.id.clone(),
        status: session.status,
        condition: session.spec.clone(),
        trials_completed: session.log.len(),
        reversals: session.state.reversals.len(),
        trial: descriptor(session, isi_ms),
        threshold: session.threshold(),
        log: ended.then(|| session.log.clone()),
    }
}

fn new_id() -> String {
    let bytes: [u8; 16] = rand::rng().random();
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

async fn start_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<StartRequest>,
) -> Result<(StatusCode, Json<SessionView>), ServiceError> {
    let spec = ConditionSpec::new(req.f0, req.mistuning, req.n_components, req.dichotic);
    let seed = req.seed.unwrap_or_else(|| rand::rng().random());
    let session = state.store.insert(Session::new(new_id(), spec, seed)?)?;
    tracing::info!(id = %session.id, seed, "session started");
    Ok((StatusCode::CREATED, Json(view(&session, state.config.isi_ms))))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(view(&state.store.get(&id)?, state.config.isi_ms)))
}

async fn interval_audio(
    State(state): State<Arc<AppState>>,
    Path((id, trial, file)): Path<(String, usize, String)>,
) -> Result<impl IntoResponse, ServiceError> {
    let interval: usize = file
        .strip_suffix(".wav")
        .and_then(|k| k.parse().ok())
        .ok_or_else(|| ServiceError::BadRequest(format!("expected '<interval>.wav', got '{file}'")))?;
    let bytes = state.store.get(&id)?.interval_wav(trial, interval)?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes))
}

async fn post_response(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<ResponseRequest>,
) -> Result<Json<ResponseView>, ServiceError> {
    let isi = state.config.isi_ms;
    let view = state.store.update(&id, |s| {
        let feedback = s.respond(req.trial, req.choice)?;
        let next_trial = if feedback.trial == s.log.len() { descriptor(s, isi) } else { None };
        Ok(ResponseView { feedback, next_trial })
    })?;
    if view.feedback.status != Status::AwaitingResponse {
        tracing::info!(id = %id, status = ?view.feedback.status, threshold = ?view.feedback.threshold, "session ended");
    }
    Ok(Json(view))
}

async fn noise(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "audio/wav")], state.noise_wav.clone())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(start_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/trial/{trial}/interval/{file}", get(interval_audio))
        .route("/sessions/{id}/response", post(post_response))
        .route("/noise.wav", get(noise))
        .with_state(state)
}
