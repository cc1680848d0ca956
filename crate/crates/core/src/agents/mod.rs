//! Guesser, Oracle, Checker and Interpreter agents over a chat backend.

mod backend;
mod interpret;
pub mod mock;
pub mod prompts;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{ChatBackend, ChatMessage, ChatRole, HttpBackend, ScriptedBackend};
pub use interpret::{parse_interpretation, Interpretation, MAX_CONCEPTS, SCORE_LIMIT};
pub use prompts::{render_prompt, PromptParams};

use crate::model::QuestionType;
use crate::taxonomy::{classify_type, strip_speaker, ClassifierError, QuestionClassifier};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("scripted backend has no replies left")]
    QueueExhausted,
    #[error("transport: {0}")]
    Transport(String),
    #[error("endpoint answered HTTP {0}")]
    Status(u16),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted {
        attempts: u32,
        last: Box<AgentError>,
    },
    #[error("unexpected payload: {0}")]
    Protocol(String),
    #[error("prompt parameter `{0}` is required")]
    MissingParameter(&'static str),
    #[error("agent returned an empty reply")]
    EmptyReply,
}

#[derive(Debug, Error)]
pub enum InterpretError {
    #[error("interpreter reply had no parseable concept:score pair: {raw:?}")]
    EmptyInterpretation { raw: String },
    #[error(transparent)]
    Agent(#[from] AgentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentRole {
    Guesser,
    Oracle,
    Checker,
    Interpreter,
}

/// Where and how to reach the model behind one role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub role: AgentRole,
    /// Base URL, or `scripted` / `mock` for the offline backends.
    pub endpoint: String,
    pub model_name: String,
    pub temperature: f64,
    pub top_p: Option<f64>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// Environment variable holding the bearer token.
    pub token_env: Option<String>,
}

impl AgentConfig {
    pub fn for_role(role: AgentRole) -> Self {
        let (temperature, top_p) = match role {
            AgentRole::Interpreter => (0.3, Some(0.8)),
            _ => (0.6, None),
        };
        AgentConfig {
            role,
            endpoint: "mock".into(),
            model_name: String::new(),
            temperature,
            top_p,
            timeout_secs: 60.0,
            max_retries: 3,
            token_env: Some("GUESSGAME_API_TOKEN".into()),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0) {
            return Err(format!("{:?}: temperature must be >= 0", self.role));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(format!("{:?}: timeout must be > 0", self.role));
        }
        if self.top_p.is_some_and(|p| !(p > 0.0 && p <= 1.0)) {
            return Err(format!("{:?}: top_p must lie in (0, 1]", self.role));
        }
        Ok(())
    }

    pub fn is_offline(&self) -> bool {
        matches!(self.endpoint.as_str(), "scripted" | "mock")
    }
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig::for_role(AgentRole::Guesser)
    }
}

/// One answered question, as the agents see the history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub question: String,
    pub answer: String,
}

pub trait Guesser: Send {
    /// Next question. `feedback` carries the reason the previous attempt
    /// was rejected, when this is a revision.
    fn ask(&mut self, history: &[Exchange], feedback: Option<&str>) -> Result<String, AgentError>;
}

pub trait Oracle: Send {
    fn answer(&mut self, history: &[Exchange], question: &str) -> Result<String, AgentError>;
}

pub trait Interpreter: Send + Sync {
    fn interpret(&self, question: &str, answer: &str) -> Result<Interpretation, InterpretError>;
}

impl<T: Interpreter + ?Sized> Interpreter for Arc<T> {
    fn interpret(&self, question: &str, answer: &str) -> Result<Interpretation, InterpretError> {
        (**self).interpret(question, answer)
    }
}

fn non_empty(reply: String) -> Result<String, AgentError> {
    if reply.trim().is_empty() {
        Err(AgentError::EmptyReply)
    } else {
        Ok(reply)
    }
}

/// Guesser driven by a chat model. Its own turns are sent back as assistant
/// messages and the Oracle's replies as user messages.
pub struct LlmGuesser<B> {
    backend: B,
    system: String,
}

impl<B: ChatBackend> LlmGuesser<B> {
    pub fn new(backend: B, forced_open: bool) -> Self {
        let system = render_prompt(
            AgentRole::Guesser,
            PromptParams {
                forced_open,
                ..Default::default()
            },
        )
        .expect("guesser prompt has no required parameters");
        LlmGuesser { backend, system }
    }
}

impl<B: ChatBackend> Guesser for LlmGuesser<B> {
    fn ask(&mut self, history: &[Exchange], feedback: Option<&str>) -> Result<String, AgentError> {
        let mut messages = vec![ChatMessage::user(
            "Oracle said: I am ready. Ask your first question.",
        )];
        for ex in history {
            messages.push(ChatMessage::assistant(format!(
                "Guesser said: {}",
                ex.question
            )));
            messages.push(ChatMessage::user(format!("Oracle said: {}", ex.answer)));
        }
        if let Some(reason) = feedback {
            messages.push(ChatMessage::user(format!(
                "Checker said: That question is not allowed ({reason}). Ask a different question."
            )));
        }
        let reply = non_empty(self.backend.chat(&self.system, &messages)?)?;
        Ok(strip_speaker(&reply, "Guesser").to_string())
    }
}

pub struct LlmOracle<B> {
    backend: B,
    system: String,
}

impl<B: ChatBackend> LlmOracle<B> {
    pub fn new(backend: B, object: &str) -> Self {
        let system = render_prompt(
            AgentRole::Oracle,
            PromptParams {
                object: Some(object),
                ..Default::default()
            },
        )
        .expect("object supplied");
        LlmOracle { backend, system }
    }

    pub fn system_prompt(&self) -> &str {
        &self.system
    }
}

impl<B: ChatBackend> Oracle for LlmOracle<B> {
    fn answer(&mut self, history: &[Exchange], question: &str) -> Result<String, AgentError> {
        let mut messages = Vec::with_capacity(history.len() * 2 + 1);
        for ex in history {
            messages.push(ChatMessage::user(format!("Guesser said: {}", ex.question)));
            messages.push(ChatMessage::assistant(format!(
                "Oracle said: {}",
                ex.answer
            )));
        }
        messages.push(ChatMessage::user(format!("Guesser said: {question}")));
        non_empty(self.backend.chat(&self.system, &messages)?)
    }
}

/// Question-type classification by a chat model.
pub struct LlmChecker<B> {
    backend: B,
}

impl<B: ChatBackend> LlmChecker<B> {
    pub fn new(backend: B) -> Self {
        LlmChecker { backend }
    }
}

/// Finds the first type name in a checker reply.
pub fn parse_checker_label(reply: &str) -> Option<QuestionType> {
    reply
        .split(|c: char| !c.is_alphabetic())
        .find_map(|w| w.parse::<QuestionType>().ok())
}

impl<B: ChatBackend> QuestionClassifier for LlmChecker<B> {
    fn classify(&self, question: &str) -> Result<QuestionType, ClassifierError> {
        let reply = self
            .backend
            .chat(
                prompts::CHECKER,
                &[ChatMessage::user(format!("Guesser said: {question}"))],
            )
            .map_err(|e| ClassifierError::Backend(e.to_string()))?;
        parse_checker_label(&reply).ok_or(ClassifierError::Unrecognized(reply))
    }
}

/// Uses the primary classifier and falls back to the rule cascade when it
/// errors. Fallbacks are logged.
pub struct CheckerWithFallback<C> {
    primary: C,
}

impl<C: QuestionClassifier> CheckerWithFallback<C> {
    pub fn new(primary: C) -> Self {
        CheckerWithFallback { primary }
    }
}

impl<C: QuestionClassifier> QuestionClassifier for CheckerWithFallback<C> {
    fn classify(&self, question: &str) -> Result<QuestionType, ClassifierError> {
        match self.primary.classify(question) {
            Ok(t) => Ok(t),
            Err(err) => {
                tracing::warn!(%err, "checker failed, using rule cascade");
                Ok(classify_type(question))
            }
        }
    }
}

pub struct LlmInterpreter<B> {
    backend: B,
}

impl<B: ChatBackend> LlmInterpreter<B> {
    pub fn new(backend: B) -> Self {
        LlmInterpreter { backend }
    }
}

/// The user message sent to the Interpreter for one exchange.
pub fn interpreter_message(question: &str, answer: &str) -> String {
    format!("Question: {question}\nAnswer: {answer}")
}

impl<B: ChatBackend> Interpreter for LlmInterpreter<B> {
    fn interpret(&self, question: &str, answer: &str) -> Result<Interpretation, InterpretError> {
        let raw = self.backend.chat(
            prompts::INTERPRETER,
            &[ChatMessage::user(interpreter_message(question, answer))],
        )?;
        let parsed =
            parse_interpretation(&raw).ok_or(InterpretError::EmptyInterpretation { raw })?;
        if parsed.dropped + parsed.truncated > 0 {
            tracing::warn!(
                dropped = parsed.dropped,
                truncated = parsed.truncated,
                "interpreter reply partially discarded"
            );
        }
        Ok(parsed)
    }
}

/// Builds the per-game agents for a batch run.
pub trait AgentFactory: Send + Sync {
    fn guesser(&self, game_id: &str, forced_open: bool) -> Result<Box<dyn Guesser>, AgentError>;
    fn oracle(&self, game_id: &str, secret: &str) -> Result<Box<dyn Oracle>, AgentError>;
    fn checker(&self) -> Arc<dyn QuestionClassifier>;
    fn interpreter(&self) -> Arc<dyn Interpreter>;
}

/// Agents reached over HTTP, one backend per role.
pub struct HttpAgents {
    guesser: AgentConfig,
    oracle: AgentConfig,
    checker: Arc<dyn QuestionClassifier>,
    interpreter: Arc<dyn Interpreter>,
}

impl HttpAgents {
    pub fn new(
        guesser: AgentConfig,
        oracle: AgentConfig,
        checker: AgentConfig,
        interpreter: AgentConfig,
    ) -> Result<Self, AgentError> {
        let checker: Arc<dyn QuestionClassifier> = Arc::new(CheckerWithFallback::new(
            LlmChecker::new(HttpBackend::new(checker)?),
        ));
        let interpreter: Arc<dyn Interpreter> =
            Arc::new(LlmInterpreter::new(HttpBackend::new(interpreter)?));
        Ok(HttpAgents {
            guesser,
            oracle,
            checker,
            interpreter,
        })
    }
}

impl AgentFactory for HttpAgents {
    fn guesser(&self, _game_id: &str, forced_open: bool) -> Result<Box<dyn Guesser>, AgentError> {
        Ok(Box::new(LlmGuesser::new(
            HttpBackend::new(self.guesser.clone())?,
            forced_open,
        )))
    }

    fn oracle(&self, _game_id: &str, secret: &str) -> Result<Box<dyn Oracle>, AgentError> {
        Ok(Box::new(LlmOracle::new(
            HttpBackend::new(self.oracle.clone())?,
            secret,
        )))
    }

    fn checker(&self) -> Arc<dyn QuestionClassifier> {
        self.checker.clone()
    }

    fn interpreter(&self) -> Arc<dyn Interpreter> {
        self.interpreter.clone()
    }
}
