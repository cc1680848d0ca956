use std::collections::VecDeque;
use std::io::BufRead;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{AgentConfig, AgentError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

/// A chat-completion provider.
pub trait ChatBackend: Send + Sync {
    fn chat(&self, system: &str, messages: &[ChatMessage]) -> Result<String, AgentError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<T> {
    fn chat(&self, system: &str, messages: &[ChatMessage]) -> Result<String, AgentError> {
        (**self).chat(system, messages)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Box<T> {
    fn chat(&self, system: &str, messages: &[ChatMessage]) -> Result<String, AgentError> {
        (**self).chat(system, messages)
    }
}

/// Pops canned replies in order, ignoring the prompt.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<String>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend {
            queue: Mutex::new(replies.into_iter().map(Into::into).collect()),
        }
    }

    /// One reply per non-empty line.
    pub fn from_lines(reader: impl BufRead) -> std::io::Result<Self> {
        let lines = reader
            .lines()
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|l| !l.trim().is_empty());
        Ok(ScriptedBackend::new(lines))
    }

    pub fn push(&self, reply: impl Into<String>) {
        self.queue
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push_back(reply.into());
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().unwrap_or_else(|e| e.into_inner()).len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn chat(&self, _system: &str, _messages: &[ChatMessage]) -> Result<String, AgentError> {
        self.queue
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .pop_front()
            .ok_or(AgentError::QueueExhausted)
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage>,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    top_p: Option<f64>,
}

#[derive(Deserialize)]
struct ChatResponse {
    text: String,
}

/// JSON chat endpoint: `POST {model, messages, temperature, top_p}` returning
/// `{text}`. Connection failures, 429 and 5xx are retried with exponential
/// backoff.
pub struct HttpBackend {
    config: AgentConfig,
    token: Option<String>,
    backoff: Duration,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: AgentConfig) -> Result<Self, AgentError> {
        let token = config
            .token_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|t| !t.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            config,
            token,
            backoff: Duration::from_millis(250),
            client,
        })
    }

    /// Initial delay between attempts; doubled after each retry.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, body: &ChatRequest<'_>) -> Result<String, (bool, AgentError)> {
        let mut request = self.client.post(&self.config.endpoint).json(body);
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| {
            (
                e.is_timeout() || e.is_connect(),
                AgentError::Transport(e.to_string()),
            )
        })?;
        let status = response.status();
        if !status.is_success() {
            let transient = status.as_u16() == 429 || status.is_server_error();
            return Err((transient, AgentError::Status(status.as_u16())));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| (false, AgentError::Protocol(e.to_string())))?;
        Ok(parsed.text)
    }
}

impl ChatBackend for HttpBackend {
    fn chat(&self, system: &str, messages: &[ChatMessage]) -> Result<String, AgentError> {
        let mut all = Vec::with_capacity(messages.len() + 1);
        all.push(ChatMessage {
            role: ChatRole::System,
            content: system.to_string(),
        });
        all.extend_from_slice(messages);
        let body = ChatRequest {
            model: &self.config.model_name,
            messages: all,
            temperature: self.config.temperature,
            top_p: self.config.top_p,
        };
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((true, err)) if attempt < self.config.max_retries => {
                    attempt += 1;
                    tracing::debug!(attempt, %err, "retrying chat request");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                Err((true, err)) => {
                    return Err(AgentError::RetriesExhausted {
                        attempts: attempt + 1,
                        last: Box::new(err),
                    })
                }
                Err((false, err)) => return Err(err),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_pops_in_order() {
        let b = ScriptedBackend::new(["Guesser said: What color is it?", "second"]);
        assert_eq!(b.chat("", &[]).unwrap(), "Guesser said: What color is it?");
        assert_eq!(b.chat("", &[]).unwrap(), "second");
        assert!(matches!(b.chat("", &[]), Err(AgentError::QueueExhausted)));
    }

    #[test]
    fn scripted_from_lines_skips_blanks() {
        let b = ScriptedBackend::from_lines(std::io::Cursor::new("a\n\nb\n")).unwrap();
        assert_eq!(b.remaining(), 2);
    }
}
