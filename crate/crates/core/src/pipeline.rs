//! Batch runs driven by a [`RunManifest`].

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::agents::mock::MockAgents;
use crate::agents::{AgentError, AgentFactory, HttpAgents};
use crate::analysis::{analyze, AnalysisError, AnalysisOptions, AnalysisReport};
use crate::conceptnet::{
    ingest, AssertionIndex, CachedEmbedder, ConceptNetError, Embedder, EmbeddingError,
    HashingEmbedder, HttpEmbedder, IngestReport, RelationWhitelist, TableEmbedder,
};
use crate::engine::{Engine, GameRun};
use crate::error::PersistError;
use crate::io::{load_corpus, open_text, write_ig_records, write_transcripts};
use crate::manifest::{unix_now, AgentsSpec, EmbedderSpec, HashedPath, RunManifest};
use crate::model::{GameConfig, IgRecord, Transcript};
use crate::scoring::{EntropyContext, ScorerFactory};

pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const IG_FILE: &str = "ig.jsonl";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    ConceptNet(#[from] ConceptNetError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("invalid agent settings: {0}")]
    AgentConfig(String),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("sample size must be at least 1")]
    EmptySample,
}

/// Loads a saved index (JSON) or ingests a raw dump, gzip or plain.
pub fn load_index(path: &Path) -> Result<(AssertionIndex, Option<IngestReport>), ConceptNetError> {
    let mut reader = open_text(path)?;
    let first = {
        let buf = std::io::BufRead::fill_buf(&mut reader)
            .map_err(|source| ConceptNetError::Read { line: 1, source })?;
        buf.iter().copied().find(|b| !b.is_ascii_whitespace())
    };
    if first == Some(b'{') {
        drop(reader);
        return Ok((AssertionIndex::load(path)?, None));
    }
    let (index, report) = ingest(reader, &RelationWhitelist::default())?;
    Ok((index, Some(report)))
}

pub fn build_embedder(
    spec: &EmbedderSpec,
    base: &Path,
) -> Result<Arc<dyn Embedder>, PipelineError> {
    Ok(match spec {
        EmbedderSpec::Hashing { dimension } => Arc::new(HashingEmbedder::new(*dimension)),
        EmbedderSpec::Table { path } => {
            Arc::new(TableEmbedder::from_tsv(open_text(&path.resolve(base))?)?)
        }
        EmbedderSpec::Http {
            url,
            model,
            timeout_secs,
        } => Arc::new(CachedEmbedder::new(HttpEmbedder::new(
            url.clone(),
            model.clone(),
            Duration::from_secs_f64(*timeout_secs),
        )?)),
    })
}

pub fn build_agents(manifest: &RunManifest) -> Result<Arc<dyn AgentFactory>, PipelineError> {
    agents_from_spec(&manifest.agents, &manifest.config)
}

/// Mock agents need the game config; HTTP agents take their settings from
/// the spec alone.
pub fn agents_from_spec(
    spec: &AgentsSpec,
    config: &GameConfig,
) -> Result<Arc<dyn AgentFactory>, PipelineError> {
    spec.validate().map_err(PipelineError::AgentConfig)?;
    Ok(match spec {
        AgentsSpec::Mock { compliance } => {
            Arc::new(MockAgents::new(config.clone()).with_compliance(*compliance))
        }
        AgentsSpec::Http {
            guesser,
            oracle,
            checker,
            interpreter,
        } => Arc::new(HttpAgents::new(
            guesser.clone(),
            oracle.clone(),
            checker.clone(),
            interpreter.clone(),
        )?),
    })
}

/// Loads the index and builds the matcher. `None` when no index is given.
pub fn entropy_context(
    index: Option<&HashedPath>,
    embedder: &EmbedderSpec,
    base: &Path,
) -> Result<Option<Arc<EntropyContext>>, PipelineError> {
    let Some(index) = index else {
        return Ok(None);
    };
    let (index, _) = load_index(&index.resolve(base))?;
    let embedder = build_embedder(embedder, base)?;
    Ok(Some(Arc::new(EntropyContext::new(
        Arc::new(index),
        embedder,
        None,
    ))))
}

pub fn build_entropy_context(
    manifest: &RunManifest,
    base: &Path,
) -> Result<Option<Arc<EntropyContext>>, PipelineError> {
    entropy_context(manifest.index.as_ref(), &manifest.embedder, base)
}

/// The secrets a manifest plays, in corpus order.
pub fn secrets(manifest: &RunManifest, base: &Path) -> Result<Vec<String>, PipelineError> {
    let corpus = load_corpus(&manifest.corpus.resolve(base))?;
    let mut objects = corpus.objects().to_vec();
    if let Some(n) = manifest.sample {
        if n == 0 {
            return Err(PipelineError::EmptySample);
        }
        objects.truncate(n);
    }
    Ok(objects)
}

pub struct RunOutput {
    pub runs: Vec<GameRun>,
    pub report: Result<AnalysisReport, AnalysisError>,
}

impl RunOutput {
    pub fn transcripts(&self) -> Vec<Transcript> {
        self.runs.iter().map(|r| r.transcript.clone()).collect()
    }

    pub fn records(&self) -> Vec<IgRecord> {
        self.runs
            .iter()
            .flat_map(|r| r.ig.iter().cloned())
            .collect()
    }

    pub fn errored(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| r.transcript.error.is_some())
            .count()
    }

    pub fn errored_fraction(&self) -> f64 {
        if self.runs.is_empty() {
            0.0
        } else {
            self.errored() as f64 / self.runs.len() as f64
        }
    }
}

/// Plays every secret and scores each turn as it happens. Paths in the
/// manifest resolve against `base`.
pub fn execute(
    manifest: &RunManifest,
    base: &Path,
    workers: usize,
    options: AnalysisOptions,
) -> Result<RunOutput, PipelineError> {
    manifest.config.validate().map_err(PersistError::from)?;
    manifest.verify_inputs(base)?;
    let secrets = secrets(manifest, base)?;
    let agents = build_agents(manifest)?;
    let entropy = build_entropy_context(manifest, base)?;
    let scorers = ScorerFactory::new(&manifest.config, agents.interpreter(), entropy);
    let runs = Engine::default().run_batch(
        &manifest.config,
        &secrets,
        agents.as_ref(),
        Some(&scorers),
        workers,
    )?;
    let transcripts: Vec<Transcript> = runs.iter().map(|r| r.transcript.clone()).collect();
    let records: Vec<IgRecord> = runs.iter().flat_map(|r| r.ig.iter().cloned()).collect();
    let report = analyze(&transcripts, &records, options);
    Ok(RunOutput { runs, report })
}

/// Writes the output files into `dir` and returns the manifest with output
/// hashes filled in. The report files are skipped when analysis failed.
pub fn write_outputs(
    dir: &Path,
    manifest: &RunManifest,
    output: &RunOutput,
) -> Result<RunManifest, PersistError> {
    std::fs::create_dir_all(dir).map_err(|e| PersistError::io(dir, e))?;
    let mut m = manifest.clone();
    let hashed = |name: &str| -> Result<HashedPath, PersistError> {
        let path = PathBuf::from(name);
        let mut h = HashedPath::new(&path);
        h.record(dir)?;
        Ok(h)
    };
    write_transcripts(&output.transcripts(), &dir.join(TRANSCRIPTS_FILE))?;
    write_ig_records(&output.records(), &dir.join(IG_FILE))?;
    m.outputs.transcripts = Some(hashed(TRANSCRIPTS_FILE)?);
    m.outputs.ig = Some(hashed(IG_FILE)?);
    if let Ok(report) = &output.report {
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| PersistError::io(&p, e))
        };
        write(REPORT_JSON_FILE, report.to_json())?;
        write(REPORT_TEXT_FILE, report.render_text())?;
        m.outputs.report_json = Some(hashed(REPORT_JSON_FILE)?);
        m.outputs.report_text = Some(hashed(REPORT_TEXT_FILE)?);
    }
    m.finished_at = Some(unix_now());
    m.save(&dir.join(MANIFEST_FILE))?;
    Ok(m)
}
