use std::convert::Infallible;
use std::io::Cursor;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use guessgame_core::analysis::per_game;
use guessgame_core::error::PersistError;
use guessgame_core::io::parse_transcripts;
use guessgame_core::model::{GameConfig, IgRecord};
use guessgame_core::scoring::{score_transcript, ScorerFactory};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::session::{constraints, status_str, Registry, SecretSelector, Session, SessionMode};
use crate::ApiError;

pub type AppState = Arc<Registry>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/question", post(post_question))
        .route("/sessions/{id}/belief", get(get_belief))
        .route("/sessions/{id}/events", get(stream_events))
        .route("/score", post(score))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub mode: SessionMode,
    #[serde(default)]
    pub config: Option<GameConfig>,
    #[serde(default)]
    pub secret: SecretSelector,
}

async fn create_session(
    State(reg): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<impl IntoResponse, ApiError> {
    let config = req.config.unwrap_or_else(|| reg.defaults.clone());
    config
        .validate()
        .map_err(|e| ApiError::invalid(e.to_string()))?;
    let secret = reg.pick_secret(&req.secret)?;
    let mode = req.mode;
    let r = reg.clone();
    let session = blocking(move || r.create(mode, config, secret)).await?;
    let (t_max, status, constraints) = session.with_view(|v| {
        (
            v.state.config.t_max,
            status_str(v.state.status),
            constraints(&v.state.config),
        )
    });
    if mode == SessionMode::AutoGame {
        let (r, s) = (reg.clone(), session.clone());
        tokio::task::spawn_blocking(move || r.run_auto(&s));
    }
    let body = json!({
        "session_id": session.id,
        "mode": mode,
        "t_max": t_max,
        "status": status,
        "constraints": constraints,
    });
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(
    State(reg): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    Ok(Json(reg.get(&id)?.describe()))
}

#[derive(Debug, Deserialize)]
pub struct Question {
    pub question: String,
}

async fn post_question(
    State(reg): State<AppState>,
    Path(id): Path<String>,
    Json(q): Json<Question>,
) -> Result<Json<Value>, ApiError> {
    let session = reg.get(&id)?;
    if session.mode != SessionMode::HumanGuesser {
        return Err(ApiError::Conflict(
            "questions are only accepted in HumanGuesser sessions".into(),
        ));
    }
    if session.with_view(|v| v.finished) {
        return Err(ApiError::Gone);
    }
    let mut game = session
        .game
        .clone()
        .try_lock_owned()
        .map_err(|_| ApiError::Conflict("another question is being answered".into()))?;
    let r = reg.clone();
    let data = blocking(move || r.submit(&session, &mut game, &q.question)).await?;
    Ok(Json(data))
}

#[derive(Debug, Deserialize)]
pub struct BeliefQuery {
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    5
}

async fn get_belief(
    State(reg): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<BeliefQuery>,
) -> Result<Json<Value>, ApiError> {
    let session = reg.get(&id)?;
    Ok(Json(session.with_view(|v| {
        let top: Vec<Value> = v
            .belief
            .top_k(q.k)
            .into_iter()
            .map(|(concept, mass)| json!({ "concept": concept, "mass": mass }))
            .collect();
        json!({
            "session_id": session.id,
            "k": q.k,
            "top_k": top,
            "support": v.belief.len(),
            "candidates": v.candidates,
            "ig_trace": v.ig,
        })
    })))
}

fn to_sse(e: &crate::session::Event) -> SseEvent {
    SseEvent::default()
        .id(e.id.to_string())
        .event(e.kind)
        .data(e.data.to_string())
}

/// Events after `after` (an SSE id), then live ones until the outcome event.
pub fn event_stream(
    session: Arc<Session>,
    after: usize,
) -> impl Stream<Item = Result<SseEvent, Infallible>> {
    let rx = session.subscribe();
    stream::unfold((session, after, rx), |(session, next, mut rx)| async move {
        loop {
            rx.borrow_and_update();
            let (event, done) = session.with_view(|v| {
                (
                    v.events.get(next).map(to_sse),
                    v.finished && next >= v.events.len(),
                )
            });
            if let Some(event) = event {
                return Some((Ok(event), (session, next + 1, rx)));
            }
            if done || rx.changed().await.is_err() {
                return None;
            }
        }
    })
}

async fn stream_events(
    State(reg): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<impl IntoResponse, ApiError> {
    let session = reg.get(&id)?;
    let after = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    Ok(Sse::new(event_stream(session, after))
        .keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}

/// Optional overrides for post hoc scoring; unset fields keep each
/// transcript's own config.
#[derive(Debug, Default, Deserialize)]
pub struct ScoreQuery {
    pub alpha: Option<f64>,
    pub prune: Option<f64>,
    pub tau: Option<f64>,
}

async fn score(
    State(reg): State<AppState>,
    Query(q): Query<ScoreQuery>,
    body: String,
) -> Result<Json<Value>, ApiError> {
    let transcripts = parse_transcripts(Cursor::new(body.as_bytes())).map_err(|e| match e {
        PersistError::Malformed { line, message } => ApiError::Unprocessable {
            message,
            line: Some(line),
        },
        PersistError::Rejected { line, source } => ApiError::Unprocessable {
            message: source.to_string(),
            line: Some(line),
        },
        other => ApiError::invalid(other.to_string()),
    })?;
    if transcripts.is_empty() {
        return Err(ApiError::invalid("no transcripts in upload"));
    }
    let r = reg.clone();
    let (records, games) = blocking(move || {
        let mut records: Vec<IgRecord> = Vec::new();
        for t in &transcripts {
            let mut config = t.config.clone();
            if let Some(a) = q.alpha {
                config.interpreter_alpha = a;
            }
            if let Some(p) = q.prune {
                config.prune_fraction = p;
            }
            if let Some(tau) = q.tau {
                config.tau = tau;
            }
            config
                .validate()
                .map_err(|e| ApiError::invalid(e.to_string()))?;
            let factory = ScorerFactory::new(&config, r.agents.interpreter(), r.entropy.clone());
            records.extend(score_transcript(t, &factory));
        }
        let games =
            per_game(&transcripts, &records).map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok((records, games))
    })
    .await?;
    Ok(Json(json!({ "records": records, "games": games })))
}
