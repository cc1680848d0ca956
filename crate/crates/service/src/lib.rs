//! HTTP service for game sessions, live event streams and post hoc scoring.

mod api;
mod config;
mod error;
mod session;

use std::path::Path;
use std::sync::Arc;

use guessgame_core::agents::mock::mock_corpus;
use guessgame_core::io::load_corpus;
use guessgame_core::model::ObjectCorpus;
use guessgame_core::pipeline::{agents_from_spec, entropy_context};

pub use api::{event_stream, router, AppState, CreateSession, Question};
pub use config::ServiceConfig;
pub use error::{ApiError, ServiceError};
pub use session::{Event, Registry, SecretSelector, Session, SessionMode};

/// Loads corpus, index and agents. Call outside an async context: HTTP
/// agents build blocking clients.
pub fn build_state(config: &ServiceConfig, base: &Path) -> Result<AppState, ServiceError> {
    let startup = |e: &dyn std::fmt::Display| ServiceError::Startup(e.to_string());
    config.game.validate().map_err(|e| startup(&e))?;
    let corpus = match &config.corpus {
        Some(p) => load_corpus(&base.join(p)).map_err(|e| startup(&e))?,
        None => ObjectCorpus::from_names(mock_corpus()).map_err(|e| startup(&e))?,
    };
    let agents = agents_from_spec(&config.agents, &config.game).map_err(|e| startup(&e))?;
    let entropy = entropy_context(config.index_path().as_ref(), &config.embedder, base)
        .map_err(|e| startup(&e))?;
    let mut registry = Registry::new(config.game.clone(), corpus, agents, entropy);
    registry.transcript_dir = config.transcript_dir.as_ref().map(|d| base.join(d));
    Ok(Arc::new(registry))
}

pub async fn serve(state: AppState, listen: &str) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await?;
    Ok(())
}
