#![allow(dead_code)]

use std::path::{Path, PathBuf};

use guessgame_core::agents::mock::{mock_conceptnet_dump, mock_corpus};
use guessgame_core::analysis::AnalysisOptions;
use guessgame_core::manifest::{HashedPath, RunManifest};
use guessgame_core::model::GameConfig;
use guessgame_core::pipeline::{
    execute, write_outputs, RunOutput, IG_FILE, REPORT_JSON_FILE, REPORT_TEXT_FILE,
    TRANSCRIPTS_FILE,
};

pub const GOLDEN_FILES: [&str; 4] = [
    TRANSCRIPTS_FILE,
    IG_FILE,
    REPORT_JSON_FILE,
    REPORT_TEXT_FILE,
];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn mock_dir() -> PathBuf {
    fixtures().join("mock")
}

pub fn golden_dir() -> PathBuf {
    fixtures().join("golden")
}

pub fn mock_corpus_text() -> String {
    mock_corpus().join("\n") + "\n"
}

/// The manifest the golden files were produced from.
pub fn fixture_manifest() -> RunManifest {
    let mut m = RunManifest::new(GameConfig::default(), "corpus.txt");
    m.index = Some(HashedPath::new("conceptnet.csv"));
    m
}

pub fn run_fixture(workers: usize) -> RunOutput {
    let dir = mock_dir();
    let m = RunManifest::load(&dir.join("manifest.json")).expect("fixture manifest");
    execute(&m, &dir, workers, AnalysisOptions::default()).expect("fixture run")
}

/// Output files of a run, as written by the pipeline.
pub fn rendered(output: &RunOutput) -> Vec<(&'static str, String)> {
    let tmp = tempfile::tempdir().unwrap();
    let m = RunManifest::load(&mock_dir().join("manifest.json")).unwrap();
    write_outputs(tmp.path(), &m, output).unwrap();
    GOLDEN_FILES
        .iter()
        .map(|name| {
            (
                *name,
                std::fs::read_to_string(tmp.path().join(name)).unwrap(),
            )
        })
        .collect()
}

pub fn update_requested() -> bool {
    std::env::var("UPDATE_GOLDEN").is_ok_and(|v| v == "1")
}

/// Rewrites the mock inputs, the manifest and the golden outputs.
pub fn regenerate() {
    let dir = mock_dir();
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("corpus.txt"), mock_corpus_text()).unwrap();
    std::fs::write(dir.join("conceptnet.csv"), mock_conceptnet_dump()).unwrap();
    let mut m = fixture_manifest();
    m.record_inputs(&dir).unwrap();
    m.save(&dir.join("manifest.json")).unwrap();
    let out = run_fixture(4);
    std::fs::create_dir_all(golden_dir()).unwrap();
    for (name, text) in rendered(&out) {
        std::fs::write(golden_dir().join(name), text).unwrap();
    }
}

/// Compares every golden file with a fresh run; returns the first mismatch.
pub fn golden_mismatch(output: &RunOutput) -> Option<String> {
    for (name, text) in rendered(output) {
        let golden = std::fs::read_to_string(golden_dir().join(name)).unwrap_or_default();
        if golden != text {
            let line = golden
                .lines()
                .zip(text.lines())
                .position(|(a, b)| a != b)
                .map_or_else(|| "length".to_string(), |i| format!("line {}", i + 1));
            return Some(format!("{name} differs at {line}"));
        }
    }
    None
}
