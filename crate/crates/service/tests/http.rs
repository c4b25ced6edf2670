use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Method, Request, StatusCode};
use binharm::audio::{read_wav_from, wav_bytes};
use binharm::psychophysics::{run_track, trial_stimulus, ThresholdObserver};
use binharm::stimulus::{ConditionSpec, TrialOptions};
use binharm_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Client {
    state: Arc<AppState>,
}

impl Client {
    fn new() -> Self {
        Self::with_config(ServiceConfig::default())
    }

    fn with_config(config: ServiceConfig) -> Self {
        Self { state: Arc::new(AppState::new(config).unwrap()) }
    }

    async fn send(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>, Option<String>) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                req = req.header(header::CONTENT_TYPE, "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let resp = router(self.state.clone()).oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let ctype = resp.headers().get(header::CONTENT_TYPE).map(|v| v.to_str().unwrap().to_string());
        (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec(), ctype)
    }

    async fn json(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes, _) = self.send(method, uri, body).await;
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn start(&self, body: Value) -> Value {
        let (status, v) = self.json(Method::POST, "/sessions", Some(body)).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        v
    }

    async fn respond(&self, id: &str, trial: u64, choice: usize) -> (StatusCode, Value) {
        self.json(Method::POST, &format!("/sessions/{id}/response"), Some(json!({ "trial": trial, "choice": choice })))
            .await
    }
}

/// Answers like a listener who hears the target exactly when its level is at
/// or above `threshold`, reading level and target from the server side.
async fn play_threshold_listener(client: &Client, id: &str, threshold: f64) -> Value {
    loop {
        let (_, view) = client.json(Method::GET, &format!("/sessions/{id}"), None).await;
        let Some(trial) = view["trial"]["trial"].as_u64() else { return view };
        let session = client.state.store.get(id).unwrap();
        let target = session.target_position + 2;
        let choice = if session.pending_level() >= threshold { target } else { 5 - target };
        let (status, fb) = client.respond(id, trial, choice).await;
        assert_eq!(status, StatusCode::OK, "{fb}");
    }
}

#[tokio::test]
async fn scripted_session_matches_in_process_track() {
    let client = Client::new();
    for (mistuning, dichotic, threshold, seed) in [(0.0, false, 47.3, 21u64), (2.64, true, 38.6, 5)] {
        let start = client
            .start(json!({ "f0": 40.0, "mistuning": mistuning, "n_components": 8, "dichotic": dichotic, "seed": seed }))
            .await;
        let id = start["id"].as_str().unwrap().to_string();
        let done = play_threshold_listener(&client, &id, threshold).await;
        assert_eq!(done["status"], "finished");

        let spec = ConditionSpec::new(40.0, mistuning, 8, dichotic);
        let track = run_track(&spec, &mut ThresholdObserver { threshold }, TrialOptions::default(), seed).unwrap();
        assert_eq!(done["threshold"].as_f64(), Some(track.threshold));
        let log: Vec<binharm::psychophysics::TrialRecord> = serde_json::from_value(done["log"].clone()).unwrap();
        assert_eq!(log, track.log);
        assert!((track.threshold - threshold).abs() <= 1.0);
    }
}

#[tokio::test]
async fn client_payloads_hide_level_and_target() {
    let client = Client::new();
    let start = client.start(json!({ "seed": 1 })).await;
    let text = start.to_string();
    assert!(start["log"].is_null());
    for secret in ["\"target_position\"", "\"level\"", "\"seed\""] {
        assert!(!text.contains(secret), "'{secret}' leaked in {text}");
    }
    assert_eq!(start["status"], "awaiting_response");
    assert_eq!(start["trial"]["trial"], 1);
    assert_eq!(start["trial"]["choices"], json!([2, 3]));
    assert_eq!(start["trial"]["isi_ms"], 300);
    let id = start["id"].as_str().unwrap();
    assert_eq!(start["trial"]["intervals"][0], format!("/sessions/{id}/trial/1/interval/1.wav"));

    let (_, fb) = client.respond(id, 1, 2).await;
    let text = fb.to_string();
    assert!(!text.contains("\"target_position\"") && !text.contains("\"level\""), "{text}");
    assert_eq!(fb["next_trial"]["trial"], 2);
}

#[tokio::test]
async fn interval_audio_matches_library_bytes() {
    let client = Client::new();
    let start = client.start(json!({ "mistuning": 2.64, "n_components": 32, "dichotic": true, "seed": 77 })).await;
    let id = start["id"].as_str().unwrap().to_string();
    let spec = ConditionSpec::new(40.0, 2.64, 32, true);
    for trial in 1..=3u64 {
        let level = client.state.store.get(&id).unwrap().pending_level();
        let stim = trial_stimulus(&spec, level, 77, trial as usize - 1, TrialOptions::default()).unwrap();
        for k in 1..=3 {
            let (status, bytes, ctype) =
                client.send(Method::GET, &format!("/sessions/{id}/trial/{trial}/interval/{k}.wav"), None).await;
            assert_eq!(status, StatusCode::OK);
            assert_eq!(ctype.as_deref(), Some("audio/wav"));
            assert_eq!(bytes, wav_bytes(stim.interval(k).unwrap()).unwrap());
        }
        client.respond(&id, trial, stim.target_interval()).await;
    }
}

#[tokio::test]
async fn invalid_requests() {
    let client = Client::new();
    let (status, body) = client.json(Method::POST, "/sessions", Some(json!({ "n_components": 7 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("component count"));
    assert!(client.state.store.is_empty());

    let (status, _) = client.json(Method::GET, "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let start = client.start(json!({ "seed": 4 })).await;
    let id = start["id"].as_str().unwrap();
    let (status, _, _) = client.send(Method::GET, &format!("/sessions/{id}/trial/1/interval/one.wav"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = client.send(Method::GET, &format!("/sessions/{id}/trial/1/interval/4.wav"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = client.send(Method::GET, &format!("/sessions/{id}/trial/2/interval/1.wav"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, body) = client.respond(id, 1, 1).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("reference"));
    let (status, _) = client.respond(id, 2, 2).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, first) = client.respond(id, 1, 3).await;
    assert_eq!(status, StatusCode::OK);
    let (status, again) = client.respond(id, 1, 3).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(first["correct"], again["correct"]);
    let (status, _) = client.respond(id, 1, 2).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, view) = client.json(Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(view["trials_completed"], 1);
}

#[tokio::test]
async fn finished_session_rejects_further_trials() {
    let client = Client::new();
    let id = client.start(json!({ "seed": 8 })).await["id"].as_str().unwrap().to_string();
    let done = play_threshold_listener(&client, &id, 50.0).await;
    assert_eq!(done["status"], "finished");
    assert!(done["trial"].is_null());
    let n = done["trials_completed"].as_u64().unwrap();
    assert_eq!(done["log"].as_array().unwrap().len() as u64, n);
    assert!(done["reversals"].as_u64().unwrap() >= 8);

    let (status, body) = client.respond(&id, n + 1, 2).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("Finished"));
    let (status, _, _) = client.send(Method::GET, &format!("/sessions/{id}/trial/{}/interval/2.wav", n + 1), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn sessions_are_independent() {
    let client = Client::new();
    let a = client.start(json!({})).await;
    let b = client.start(json!({})).await;
    let (ida, idb) = (a["id"].as_str().unwrap(), b["id"].as_str().unwrap());
    assert_ne!(ida, idb);
    let (sa, sb) = (client.state.store.get(ida).unwrap(), client.state.store.get(idb).unwrap());
    assert_ne!(sa.seed, sb.seed);
    assert_ne!(sa.pending_stimulus().unwrap().reference, sb.pending_stimulus().unwrap().reference);
    client.respond(ida, 1, 2).await;
    assert_eq!(client.state.store.get(idb).unwrap().log.len(), 0);
}

#[tokio::test]
async fn noise_track_is_uncorrelated_between_ears() {
    let client = Client::new();
    let (status, bytes, ctype) = client.send(Method::GET, "/noise.wav", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype.as_deref(), Some("audio/wav"));
    let noise = read_wav_from(std::io::Cursor::new(bytes)).unwrap();
    assert_eq!(noise.sample_rate(), 48_000.0);
    assert_eq!(noise.len(), 480_000);
    let (l, r) = (&noise.left.samples, &noise.right.samples);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let rho = dot(l, r) / (dot(l, l) * dot(r, r)).sqrt();
    assert!(rho.abs() < 0.05, "interaural correlation {rho}");
}

#[tokio::test]
async fn snapshots_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig { snapshot_dir: Some(dir.path().to_path_buf()), ..Default::default() };
    let client = Client::with_config(config.clone());
    let id = client.start(json!({ "seed": 12 })).await["id"].as_str().unwrap().to_string();
    client.respond(&id, 1, 2).await;
    client.respond(&id, 2, 3).await;
    let before = client.state.store.get(&id).unwrap();

    let restarted = Client::with_config(config);
    assert_eq!(restarted.state.store.get(&id).unwrap(), before);
    let (status, view) = restarted.json(Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["trial"]["trial"], 3);
}
