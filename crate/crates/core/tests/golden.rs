mod common;

use std::sync::Arc;

use common::*;
use guessgame_core::agents::mock::{mock_conceptnet_dump, MockAgents};
use guessgame_core::agents::AgentFactory;
use guessgame_core::io::read_ig_records;
use guessgame_core::manifest::RunManifest;
use guessgame_core::model::IgRecord;
use guessgame_core::pipeline::{build_entropy_context, IG_FILE, TRANSCRIPTS_FILE};
use guessgame_core::scoring::{score_transcript, ScorerFactory};

#[test]
fn fixture_inputs_match_generators() {
    if update_requested() {
        regenerate();
    }
    let dir = mock_dir();
    assert_eq!(
        std::fs::read_to_string(dir.join("corpus.txt")).unwrap(),
        mock_corpus_text()
    );
    assert_eq!(
        std::fs::read_to_string(dir.join("conceptnet.csv")).unwrap(),
        mock_conceptnet_dump()
    );
    let m = RunManifest::load(&dir.join("manifest.json")).unwrap();
    m.verify_inputs(&dir).unwrap();
    assert!(m.corpus.sha256.is_some());
}

#[test]
fn golden_outputs_are_reproduced() {
    if update_requested() {
        regenerate();
    }
    let out = run_fixture(4);
    assert_eq!(out.runs.len(), 20);
    assert_eq!(golden_mismatch(&out), None);
    // worker count must not matter
    assert_eq!(golden_mismatch(&run_fixture(1)), None);
}

#[test]
fn replay_matches_live_trace() {
    let dir = mock_dir();
    let m = RunManifest::load(&dir.join("manifest.json")).unwrap();
    let transcripts =
        guessgame_core::io::read_transcripts(&golden_dir().join(TRANSCRIPTS_FILE)).unwrap();
    let live = read_ig_records(&golden_dir().join(IG_FILE)).unwrap();
    let agents = MockAgents::new(m.config.clone());
    let ctx = build_entropy_context(&m, &dir).unwrap();
    assert!(ctx.is_some());
    let factory = ScorerFactory::new(&m.config, Arc::clone(&agents.interpreter()), ctx);
    let replayed: Vec<IgRecord> = transcripts
        .iter()
        .flat_map(|t| score_transcript(t, &factory))
        .collect();
    assert_eq!(replayed.len(), live.len());
    assert_eq!(replayed, live);
}
