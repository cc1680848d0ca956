use std::path::{Path, PathBuf};

use guessgame_core::manifest::{AgentsSpec, EmbedderSpec, HashedPath};
use guessgame_core::model::GameConfig;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// Service settings, read from TOML and then patched from the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub listen: String,
    /// Newline-delimited object list. The built-in mock objects when unset.
    pub corpus: Option<PathBuf>,
    /// ConceptNet dump or saved index; enables the entropy metric.
    pub index: Option<PathBuf>,
    pub embedder: EmbedderSpec,
    pub agents: AgentsSpec,
    /// Config for sessions that do not send their own.
    pub game: GameConfig,
    /// Finished games are written here as `<session_id>.jsonl`.
    pub transcript_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            corpus: None,
            index: None,
            embedder: EmbedderSpec::default(),
            agents: AgentsSpec::default(),
            game: GameConfig::default(),
            transcript_dir: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// `GUESSGAME_LISTEN`, `GUESSGAME_CORPUS`, `GUESSGAME_INDEX`,
    /// `GUESSGAME_TRANSCRIPT_DIR`, plus the agent endpoint and model
    /// variables understood by [`AgentsSpec::apply_overrides`].
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(v) = lookup("GUESSGAME_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = lookup("GUESSGAME_CORPUS") {
            self.corpus = Some(v.into());
        }
        if let Some(v) = lookup("GUESSGAME_INDEX") {
            self.index = Some(v.into());
        }
        if let Some(v) = lookup("GUESSGAME_TRANSCRIPT_DIR") {
            self.transcript_dir = Some(v.into());
        }
        self.agents.apply_overrides(&lookup);
    }

    pub fn index_path(&self) -> Option<HashedPath> {
        self.index.as_ref().map(HashedPath::new)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_env() {
        let mut c = ServiceConfig::from_toml(
            r#"
listen = "0.0.0.0:9000"
index = "dump.csv"

[game]
t_max = 20
forced_open = true

[agents]
kind = "mock"
compliance = 1.0
"#,
        )
        .unwrap();
        assert_eq!(c.game.t_max, 20);
        assert!(c.game.forced_open);
        assert_eq!(c.agents, AgentsSpec::Mock { compliance: 1.0 });
        c.apply_env(|k| match k {
            "GUESSGAME_LISTEN" => Some("127.0.0.1:1".into()),
            "GUESSGAME_AGENT_ENDPOINT" => Some("http://llm/v1".into()),
            _ => None,
        });
        assert_eq!(c.listen, "127.0.0.1:1");
        assert!(matches!(c.agents, AgentsSpec::Http { .. }));
        assert!(ServiceConfig::from_toml("listen = 3").is_err());
    }
}
