//! Offline parameter sweeps over recorded transcripts.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{analyze_metric, per_game, AftFit, AftMode, AnalysisError, CorrelationResult, Metric};
use crate::agents::{InterpretError, Interpretation, Interpreter};
use crate::model::{GameConfig, IgRecord, Transcript};
use crate::scoring::{score_transcript, EntropyContext, ScorerFactory};

/// Interpreter wrapper that asks each (question, answer) pair once. Errors
/// are remembered too, so every grid point sees the same evidence.
pub struct MemoInterpreter {
    inner: Arc<dyn Interpreter>,
    cache: Mutex<HashMap<(String, String), Result<Interpretation, String>>>,
}

impl MemoInterpreter {
    pub fn new(inner: Arc<dyn Interpreter>) -> Self {
        MemoInterpreter {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Interpreter for MemoInterpreter {
    fn interpret(&self, question: &str, answer: &str) -> Result<Interpretation, InterpretError> {
        let key = (question.to_string(), answer.to_string());
        if let Some(hit) = self
            .cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&key)
        {
            return hit
                .clone()
                .map_err(|raw| InterpretError::EmptyInterpretation { raw });
        }
        let stored = match self.inner.interpret(question, answer) {
            Ok(i) => Ok(i),
            Err(InterpretError::EmptyInterpretation { raw }) => Err(raw),
            Err(InterpretError::Agent(e)) => Err(e.to_string()),
        };
        self.cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, stored.clone());
        stored.map_err(|raw| InterpretError::EmptyInterpretation { raw })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Tau,
    AlphaPrune,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub alpha: f64,
    pub prune_fraction: f64,
    pub n_games: usize,
    pub aft: Option<AftFit>,
    pub spearman: Option<CorrelationResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub metric: Metric,
    pub mode: AftMode,
    pub rows: Vec<SweepRow>,
}

fn evaluate(
    transcripts: &[Transcript],
    factory: &ScorerFactory,
    metric: Metric,
    mode: AftMode,
    config: &GameConfig,
) -> SweepRow {
    let records: Vec<IgRecord> = transcripts
        .iter()
        .flat_map(|t| score_transcript(t, factory))
        .collect();
    let mut row = SweepRow {
        tau: factory.tau,
        alpha: config.interpreter_alpha,
        prune_fraction: config.prune_fraction,
        n_games: 0,
        aft: None,
        spearman: None,
        notices: Vec::new(),
    };
    match per_game(transcripts, &records) {
        Ok(games) => {
            let m = analyze_metric(&games, metric, mode);
            row.n_games = m.n_games;
            row.aft = m.aft;
            row.spearman = m.spearman;
            row.notices
                .extend(m.spearman_notice.map(|n| format!("spearman: {n}")));
            row.notices
                .extend(m.aft_notice.map(|n| format!("aft: {n}")));
        }
        Err(e) => row.notices.push(e.to_string()),
    }
    row
}

/// Entropy-IG analysis at each similarity threshold.
pub fn sweep_tau(
    transcripts: &[Transcript],
    base: &GameConfig,
    context: Arc<EntropyContext>,
    taus: &[f64],
    mode: AftMode,
) -> Result<SweepReport, AnalysisError> {
    if taus.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let rows = taus
        .par_iter()
        .map(|&tau| {
            let config = GameConfig {
                tau,
                ..base.clone()
            };
            let factory = ScorerFactory::entropy_only(&config, context.clone());
            evaluate(transcripts, &factory, Metric::Entropy, mode, &config)
        })
        .collect();
    Ok(SweepReport {
        kind: SweepKind::Tau,
        metric: Metric::Entropy,
        mode,
        rows,
    })
}

/// Bayesian-IG analysis over every (alpha, prune fraction) pair, alpha
/// outermost. The Interpreter is consulted once per distinct exchange.
pub fn sweep_alpha_prune(
    transcripts: &[Transcript],
    base: &GameConfig,
    interpreter: Arc<dyn Interpreter>,
    alphas: &[f64],
    prune_fractions: &[f64],
    mode: AftMode,
) -> Result<SweepReport, AnalysisError> {
    if alphas.is_empty() || prune_fractions.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let memo = Arc::new(MemoInterpreter::new(interpreter));
    // fill the cache in transcript order before fanning out
    for t in transcripts {
        for turn in &t.turns {
            let _ = memo.interpret(&turn.question, &turn.answer);
        }
    }
    let grid: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| prune_fractions.iter().map(move |&p| (a, p)))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&(alpha, prune)| {
            let config = GameConfig {
                interpreter_alpha: alpha,
                prune_fraction: prune,
                ..base.clone()
            };
            let factory = ScorerFactory::new(&config, memo.clone(), None);
            evaluate(transcripts, &factory, Metric::Bayes, mode, &config)
        })
        .collect();
    Ok(SweepReport {
        kind: SweepKind::AlphaPrune,
        metric: Metric::Bayes,
        mode,
        rows,
    })
}

/// The threshold grid 0.55, 0.60, ..., 0.85.
pub fn default_tau_grid() -> Vec<f64> {
    (0..7).map(|i| (55 + 5 * i) as f64 / 100.0).collect()
}

pub fn default_alpha_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

/// No pruning, then 15% to 65% in steps of 10.
pub fn default_prune_grid() -> Vec<f64> {
    vec![0.0, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65]
}
