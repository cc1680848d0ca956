//! Aggregate statistics over recorded games.

pub mod aft;
pub mod correlation;
pub mod ig;
pub mod report;
pub mod summary;
pub mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aft::{fit_aft, standardize, AftData, AftFit};
pub use correlation::{spearman, CorrelationResult};
pub use ig::{ig_by_type, join_turns, per_game, GameIg, IgGroup, IgRow, Metric, TurnIg};
pub use report::{analyze, AnalysisOptions, AnalysisReport};
pub use summary::{summarize, SummaryStats};
pub use sweep::{sweep_alpha_prune, sweep_tau, MemoInterpreter, SweepKind, SweepReport, SweepRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no data")]
    Empty,
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("input lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("input is constant")]
    ConstantInput,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("every observation is censored")]
    AllCensored,
    #[error("information matrix is singular")]
    Singular,
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("no IG record for {game_id} turn {t}")]
    MissingIg { game_id: String, t: u32 },
}

/// How failed games enter the survival fit and the correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AftMode {
    /// Failures are right-censored at their last turn.
    #[default]
    Censored,
    /// Only successful games are used.
    SuccessesOnly,
}

/// Spearman and AFT results for one IG metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAnalysis {
    pub metric: Metric,
    pub n_games: usize,
    pub spearman: Option<CorrelationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spearman_notice: Option<String>,
    pub aft: Option<AftFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aft_notice: Option<String>,
}

/// Correlates per-game mean IG with game length and fits the AFT model with
/// the standardized mean IG as covariate.
pub fn analyze_metric(games: &[GameIg], metric: Metric, mode: AftMode) -> MetricAnalysis {
    let pool: Vec<&GameIg> = games
        .iter()
        .filter(|g| mode == AftMode::Censored || g.success)
        .collect();
    let ig: Vec<f64> = pool.iter().map(|g| g.mean(metric)).collect();
    let turns: Vec<f64> = pool.iter().map(|g| f64::from(g.turns)).collect();
    let (spearman, spearman_notice) = match correlation::spearman(&ig, &turns) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let fitted = standardize(&ig).and_then(|z| {
        let y: Vec<f64> = turns.iter().map(|t| t.ln()).collect();
        let censored: Vec<bool> = pool.iter().map(|g| !g.success).collect();
        fit_aft(&y, &censored, &z)
    });
    let (aft, aft_notice) = match fitted {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    MetricAnalysis {
        metric,
        n_games: pool.len(),
        spearman,
        spearman_notice,
        aft,
        aft_notice,
    }
}
