//! Run manifests: everything needed to repeat a batch, plus content hashes
//! of its inputs and outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, AgentRole};
use crate::error::PersistError;
use crate::io::sha256_hex;
use crate::model::GameConfig;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// A file reference with an optional recorded SHA-256 of its bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedPath {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

impl HashedPath {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        HashedPath {
            path: path.into(),
            sha256: None,
        }
    }

    /// Relative paths resolve against `base`.
    pub fn resolve(&self, base: &Path) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            base.join(&self.path)
        }
    }

    pub fn hash_file(path: &Path) -> Result<String, PersistError> {
        let bytes = std::fs::read(path).map_err(|e| PersistError::io(path, e))?;
        Ok(sha256_hex(&bytes))
    }

    /// Fills in the hash from disk.
    pub fn record(&mut self, base: &Path) -> Result<(), PersistError> {
        self.sha256 = Some(Self::hash_file(&self.resolve(base))?);
        Ok(())
    }

    /// Recomputes the hash and compares it with the recorded one, if any.
    pub fn verify(&self, base: &Path, what: &str) -> Result<(), PersistError> {
        let Some(expected) = &self.sha256 else {
            return Ok(());
        };
        let actual = Self::hash_file(&self.resolve(base))?;
        if &actual != expected {
            return Err(PersistError::HashMismatch {
                what: what.to_string(),
                expected: expected.clone(),
                actual,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AgentsSpec {
    /// Offline agents over the built-in mock world.
    Mock {
        #[serde(default = "default_compliance")]
        compliance: f64,
    },
    Http {
        guesser: AgentConfig,
        oracle: AgentConfig,
        checker: AgentConfig,
        interpreter: AgentConfig,
    },
}

fn default_compliance() -> f64 {
    0.8
}

impl Default for AgentsSpec {
    fn default() -> Self {
        AgentsSpec::Mock {
            compliance: default_compliance(),
        }
    }
}

impl AgentsSpec {
    pub fn http_defaults(endpoint: &str) -> Self {
        let cfg = |role| AgentConfig {
            endpoint: endpoint.to_string(),
            ..AgentConfig::for_role(role)
        };
        AgentsSpec::Http {
            guesser: cfg(AgentRole::Guesser),
            oracle: cfg(AgentRole::Oracle),
            checker: cfg(AgentRole::Checker),
            interpreter: cfg(AgentRole::Interpreter),
        }
    }

    /// Applies `GUESSGAME_AGENT_ENDPOINT` (every role; switches mock agents
    /// to HTTP), then `GUESSGAME_<ROLE>_ENDPOINT` and `GUESSGAME_<ROLE>_MODEL`,
    /// through `lookup`.
    pub fn apply_overrides(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(endpoint) = lookup("GUESSGAME_AGENT_ENDPOINT") {
            match self {
                AgentsSpec::Mock { .. } => *self = AgentsSpec::http_defaults(&endpoint),
                AgentsSpec::Http {
                    guesser,
                    oracle,
                    checker,
                    interpreter,
                } => {
                    for cfg in [guesser, oracle, checker, interpreter] {
                        cfg.endpoint = endpoint.clone();
                    }
                }
            }
        }
        if let AgentsSpec::Http {
            guesser,
            oracle,
            checker,
            interpreter,
        } = self
        {
            for (name, cfg) in [
                ("GUESSER", guesser),
                ("ORACLE", oracle),
                ("CHECKER", checker),
                ("INTERPRETER", interpreter),
            ] {
                if let Some(v) = lookup(&format!("GUESSGAME_{name}_ENDPOINT")) {
                    cfg.endpoint = v;
                }
                if let Some(v) = lookup(&format!("GUESSGAME_{name}_MODEL")) {
                    cfg.model_name = v;
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            AgentsSpec::Mock { compliance } if !(0.0..=1.0).contains(compliance) => {
                Err("mock compliance must lie in [0, 1]".into())
            }
            AgentsSpec::Mock { .. } => Ok(()),
            AgentsSpec::Http {
                guesser,
                oracle,
                checker,
                interpreter,
            } => [guesser, oracle, checker, interpreter]
                .into_iter()
                .try_for_each(AgentConfig::validate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbedderSpec {
    /// Feature-hashing bag of words; needs no model.
    Hashing {
        #[serde(default = "default_dimension")]
        dimension: usize,
    },
    /// Precomputed vectors, one `label<TAB>v1,v2,...` line each.
    Table { path: HashedPath },
    Http {
        url: String,
        #[serde(default)]
        model: Option<String>,
        #[serde(default = "default_embed_timeout")]
        timeout_secs: f64,
    },
}

fn default_dimension() -> usize {
    crate::conceptnet::embedding::DEFAULT_DIMENSION
}

fn default_embed_timeout() -> f64 {
    30.0
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::Hashing {
            dimension: default_dimension(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub transcripts: Option<HashedPath>,
    pub ig: Option<HashedPath>,
    pub report_json: Option<HashedPath>,
    pub report_text: Option<HashedPath>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config: GameConfig,
    pub corpus: HashedPath,
    /// ConceptNet dump or saved index. Without it the entropy metric is off.
    #[serde(default)]
    pub index: Option<HashedPath>,
    #[serde(default)]
    pub embedder: EmbedderSpec,
    #[serde(default)]
    pub agents: AgentsSpec,
    /// Play only the first `sample` corpus objects.
    #[serde(default)]
    pub sample: Option<usize>,
    #[serde(default)]
    pub started_at: Option<u64>,
    #[serde(default)]
    pub finished_at: Option<u64>,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl RunManifest {
    pub fn new(config: GameConfig, corpus: impl Into<PathBuf>) -> Self {
        RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config,
            corpus: HashedPath::new(corpus),
            index: None,
            embedder: EmbedderSpec::default(),
            agents: AgentsSpec::default(),
            sample: None,
            started_at: None,
            finished_at: None,
            outputs: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, PersistError> {
        let m: RunManifest = serde_json::from_str(text)?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(PersistError::SchemaVersion(m.schema_version));
        }
        m.config.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, PersistError> {
        let text = std::fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        std::fs::write(path, self.to_json()).map_err(|e| PersistError::io(path, e))
    }

    /// Checks every recorded input hash against the files under `base`.
    pub fn verify_inputs(&self, base: &Path) -> Result<(), PersistError> {
        self.corpus.verify(base, "corpus")?;
        if let Some(index) = &self.index {
            index.verify(base, "index")?;
        }
        if let EmbedderSpec::Table { path } = &self.embedder {
            path.verify(base, "embedding table")?;
        }
        Ok(())
    }

    pub fn verify_outputs(&self, base: &Path) -> Result<(), PersistError> {
        let o = &self.outputs;
        for (what, p) in [
            ("transcripts", &o.transcripts),
            ("ig", &o.ig),
            ("report_json", &o.report_json),
            ("report_text", &o.report_text),
        ] {
            if let Some(p) = p {
                p.verify(base, what)?;
            }
        }
        Ok(())
    }

    pub fn record_inputs(&mut self, base: &Path) -> Result<(), PersistError> {
        self.corpus.record(base)?;
        if let Some(index) = &mut self.index {
            index.record(base)?;
        }
        if let EmbedderSpec::Table { path } = &mut self.embedder {
            path.record(base)?;
        }
        Ok(())
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}
