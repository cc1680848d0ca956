use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use guessgame_core::agents::{AgentFactory, Guesser, Oracle};
use guessgame_core::belief::BeliefState;
use guessgame_core::engine::{Engine, GameState, GameStatus, Submission, Verdict};
use guessgame_core::io::write_transcripts;
use guessgame_core::model::{GameConfig, IgRecord, ObjectCorpus, QuestionType, TurnRecord};
use guessgame_core::scoring::{EntropyContext, GameScorer, ScorerFactory};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{watch, Mutex};

use crate::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionMode {
    /// Guesser and Oracle are both agents; the game runs on its own.
    AutoGame,
    /// A person asks the questions through `POST /sessions/{id}/question`.
    HumanGuesser,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SecretSelector {
    #[default]
    Random,
    Fixed {
        object: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Event {
    /// 1-based; sent as the SSE id.
    pub id: usize,
    pub kind: &'static str,
    pub data: Value,
}

/// What readers see. Updated after every turn; never holds the secret
/// separately from `state`.
pub struct View {
    pub state: GameState,
    pub ig: Vec<IgRecord>,
    pub belief: BeliefState,
    pub candidates: Option<usize>,
    pub events: Vec<Event>,
    pub error: Option<String>,
    pub finished: bool,
}

pub struct Game {
    pub state: GameState,
    pub oracle: Box<dyn Oracle>,
    pub guesser: Option<Box<dyn Guesser>>,
    pub scorer: GameScorer,
}

pub struct Session {
    pub id: String,
    pub mode: SessionMode,
    pub created_at: u64,
    pub game: Arc<Mutex<Game>>,
    pub view: RwLock<View>,
    notify: watch::Sender<usize>,
}

fn ig_json(ig: Option<&IgRecord>) -> Value {
    match ig {
        Some(r) => json!({
            "bayes": r.bayes_ig,
            "entropy": r.entropy_ig,
            "bayes_skipped": r.bayes_skipped,
            "entropy_skipped": r.entropy_skipped,
            "candidates_after": r.candidates_after,
        }),
        None => Value::Null,
    }
}

pub fn status_str(status: GameStatus) -> &'static str {
    match status {
        GameStatus::InProgress => "InProgress",
        GameStatus::Success => "Success",
        GameStatus::Failure => "Failure",
    }
}

impl Session {
    pub fn subscribe(&self) -> watch::Receiver<usize> {
        self.notify.subscribe()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, View> {
        self.view.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, View> {
        self.view.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn with_view<T>(&self, f: impl FnOnce(&View) -> T) -> T {
        f(&self.read())
    }

    fn push_event(view: &mut View, kind: &'static str, data: Value) {
        let id = view.events.len() + 1;
        view.events.push(Event { id, kind, data });
    }

    /// Publishes an accepted turn and returns its event payload.
    pub fn record_turn(&self, game: &Game, turn: &TurnRecord, ig: Option<&IgRecord>) -> Value {
        let data = json!({
            "turn": turn.t,
            "question": turn.question,
            "type": turn.q_type,
            "format": turn.q_format,
            "answer": turn.answer,
            "verdict": turn.verdict,
            "violation": turn.constraint_violation,
            "revision_count": turn.revision_count,
            "ig": ig_json(ig),
            "status": status_str(game.state.status),
            "remaining": game.state.remaining(),
        });
        {
            let mut v = self.write();
            v.state = game.state.clone();
            v.ig.extend(ig.cloned());
            v.belief = game.scorer.belief().clone();
            v.candidates = game.scorer.candidates().map(|c| c.len());
            Self::push_event(&mut v, "turn", data.clone());
        }
        self.notify.send_modify(|n| *n += 1);
        data
    }

    pub fn record_violation(
        &self,
        game: &Game,
        question: &str,
        reason: &str,
        message: &str,
        q_type: QuestionType,
    ) -> Value {
        let data = json!({
            "question": question,
            "violation": reason,
            "message": message,
            "type": q_type,
            "remaining": game.state.remaining(),
        });
        Self::push_event(&mut self.write(), "violation", data.clone());
        self.notify.send_modify(|n| *n += 1);
        data
    }

    /// Closes the session with a final outcome event; the secret is revealed
    /// here and not before.
    pub fn finish(&self, game: &Game, error: Option<String>, transcript_dir: Option<&PathBuf>) {
        let transcript = game.state.to_transcript(&self.id, error.clone());
        {
            let mut v = self.write();
            if v.finished {
                return;
            }
            v.state = game.state.clone();
            v.error = error.clone();
            v.finished = true;
            let data = json!({
                "outcome": transcript.outcome,
                "turn_count": transcript.turn_count,
                "secret": transcript.secret_object,
                "error": error,
            });
            Self::push_event(&mut v, "outcome", data);
        }
        self.notify.send_modify(|n| *n += 1);
        if let Some(dir) = transcript_dir {
            let path = dir.join(format!("{}.jsonl", self.id));
            if let Err(e) = std::fs::create_dir_all(dir)
                .map_err(|e| e.to_string())
                .and_then(|_| {
                    write_transcripts(std::slice::from_ref(&transcript), &path)
                        .map_err(|e| e.to_string())
                })
            {
                tracing::warn!(session = %self.id, error = %e, "could not write transcript");
            }
        }
    }

    /// Session summary. The secret appears only once the game is over.
    pub fn describe(&self) -> Value {
        let v = self.read();
        let s = &v.state;
        let mut out = json!({
            "session_id": self.id,
            "mode": self.mode,
            "created_at": self.created_at,
            "status": status_str(s.status),
            "t_max": s.config.t_max,
            "turn_count": s.turn_count(),
            "remaining": s.remaining(),
            "constraints": constraints(&s.config),
            "history": s.history,
            "ig_trace": v.ig,
            "error": v.error,
        });
        if v.finished {
            out["secret"] = json!(s.secret);
            out["outcome"] = json!(s.to_transcript(&self.id, None).outcome);
        }
        out
    }
}

pub fn constraints(config: &GameConfig) -> Value {
    json!({
        "allowed_types": config.allowed_types,
        "repeat_limit_k": config.repeat_limit_k,
        "forced_open": config.forced_open,
    })
}

/// Shared state behind every handler.
pub struct Registry {
    pub defaults: GameConfig,
    pub corpus: ObjectCorpus,
    pub agents: Arc<dyn AgentFactory>,
    pub entropy: Option<Arc<EntropyContext>>,
    pub engine: Engine,
    pub transcript_dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl Registry {
    pub fn new(
        defaults: GameConfig,
        corpus: ObjectCorpus,
        agents: Arc<dyn AgentFactory>,
        entropy: Option<Arc<EntropyContext>>,
    ) -> Self {
        Registry {
            defaults,
            corpus,
            agents,
            entropy,
            engine: Engine::default(),
            transcript_dir: None,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or(ApiError::NotFound)
    }

    pub fn pick_secret(&self, selector: &SecretSelector) -> Result<String, ApiError> {
        use rand::seq::IndexedRandom;
        match selector {
            SecretSelector::Random => Ok(self
                .corpus
                .objects()
                .choose(&mut rand::rng())
                .cloned()
                .expect("corpus is never empty")),
            SecretSelector::Fixed { object } => {
                if self.corpus.contains(object) {
                    Ok(guessgame_core::model::normalize_name(object))
                } else {
                    Err(ApiError::invalid(format!("unknown object `{object}`")))
                }
            }
        }
    }

    /// Builds agents and registers the session. Blocking: HTTP agents
    /// construct blocking clients.
    pub fn create(
        &self,
        mode: SessionMode,
        config: GameConfig,
        secret: String,
    ) -> Result<Arc<Session>, ApiError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let upstream = |e: guessgame_core::agents::AgentError| ApiError::Upstream(e.to_string());
        let oracle = self.agents.oracle(&id, &secret).map_err(upstream)?;
        let guesser = match mode {
            SessionMode::AutoGame => Some(
                self.agents
                    .guesser(&id, config.forced_open)
                    .map_err(upstream)?,
            ),
            SessionMode::HumanGuesser => None,
        };
        let scorer = ScorerFactory::new(&config, self.agents.interpreter(), self.entropy.clone())
            .scorer(&id);
        let state = GameState::new(config, &secret);
        let view = View {
            state: state.clone(),
            ig: Vec::new(),
            belief: scorer.belief().clone(),
            candidates: scorer.candidates().map(|c| c.len()),
            events: Vec::new(),
            error: None,
            finished: false,
        };
        let session = Arc::new(Session {
            id: id.clone(),
            mode,
            created_at: guessgame_core::manifest::unix_now(),
            game: Arc::new(Mutex::new(Game {
                state,
                oracle,
                guesser,
                scorer,
            })),
            view: RwLock::new(view),
            notify: watch::channel(0).0,
        });
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, session.clone());
        Ok(session)
    }

    /// Plays an AutoGame to the end. Runs on a blocking thread.
    pub fn run_auto(&self, session: &Session) {
        let mut game = session.game.blocking_lock();
        let checker = self.agents.checker();
        while !game.state.is_over() {
            let Game {
                state,
                oracle,
                guesser,
                scorer,
            } = &mut *game;
            let Some(guesser) = guesser.as_mut() else {
                break;
            };
            match self.engine.step(
                state,
                guesser.as_mut(),
                oracle.as_mut(),
                checker.as_ref(),
                scorer,
            ) {
                Ok((turn, ig)) => {
                    session.record_turn(&game, &turn, ig.as_ref());
                }
                Err(e) => {
                    session.finish(&game, Some(e.to_string()), self.transcript_dir.as_ref());
                    return;
                }
            }
        }
        session.finish(&game, None, self.transcript_dir.as_ref());
    }

    /// One human question. Blocking; the caller holds the game lock.
    pub fn submit(
        &self,
        session: &Session,
        game: &mut Game,
        question: &str,
    ) -> Result<Value, ApiError> {
        if game.state.is_over() {
            return Err(ApiError::Gone);
        }
        let checker = self.agents.checker();
        let Game {
            state,
            oracle,
            scorer,
            ..
        } = game;
        let result = self
            .engine
            .submit(state, question, oracle.as_mut(), checker.as_ref(), scorer);
        let submission = match result {
            Ok(s) => s,
            Err(guessgame_core::engine::EngineError::EmptyQuestion) => {
                return Err(ApiError::invalid("question is empty"));
            }
            Err(guessgame_core::engine::EngineError::NotInProgress) => return Err(ApiError::Gone),
            Err(e) => return Err(ApiError::Upstream(e.to_string())),
        };
        match submission {
            Submission::Rejected(v) => {
                let Verdict::Violation(reason) = v.verdict else {
                    return Err(ApiError::Internal("rejected without a violation".into()));
                };
                let mut data = session.record_violation(
                    game,
                    question.trim(),
                    reason.as_str(),
                    reason.describe(),
                    v.q_type,
                );
                data["status"] = json!("violation");
                Ok(data)
            }
            Submission::Accepted { turn, ig } => {
                let mut data = session.record_turn(game, &turn, ig.as_ref());
                if game.state.is_over() {
                    session.finish(game, None, self.transcript_dir.as_ref());
                    data["outcome"] = json!(game.state.to_transcript(&session.id, None).outcome);
                    data["secret"] = json!(game.state.secret);
                }
                Ok(data)
            }
        }
    }
}
