use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::{QuestionFormat, QuestionType, Transcript};
use crate::taxonomy::detect_enumeration;

pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n_games: usize,
    pub successes: usize,
    pub sr: f64,
    /// Normal-approximation 95% half-width of `sr`.
    pub sr_ci: f64,
    /// Mean turn count over successful games.
    pub anq: Option<f64>,
    pub anq_ci: Option<f64>,
    pub n_questions: usize,
    pub type_ratios: BTreeMap<QuestionType, f64>,
    pub format_ratios: BTreeMap<QuestionFormat, f64>,
    pub enumeration_count: usize,
    pub enumeration_ratio: f64,
    pub errored_games: usize,
}

pub fn summarize(
    transcripts: &[Transcript],
    enumeration_threshold: f64,
) -> Result<SummaryStats, AnalysisError> {
    if transcripts.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n = transcripts.len();
    let lengths: Vec<f64> = transcripts
        .iter()
        .filter(|t| t.is_success())
        .map(|t| f64::from(t.turn_count))
        .collect();
    let successes = lengths.len();
    let sr = successes as f64 / n as f64;
    let sr_ci = Z_95 * (sr * (1.0 - sr) / n as f64).sqrt();
    let anq = (!lengths.is_empty()).then(|| lengths.iter().sum::<f64>() / successes as f64);
    let anq_ci = anq.filter(|_| successes >= 2).map(|mean| {
        let var = lengths.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (successes - 1) as f64;
        Z_95 * var.sqrt() / (successes as f64).sqrt()
    });

    let mut types: BTreeMap<QuestionType, usize> =
        QuestionType::ALL.iter().map(|t| (*t, 0)).collect();
    let mut formats: BTreeMap<QuestionFormat, usize> =
        [(QuestionFormat::Open, 0), (QuestionFormat::Closed, 0)]
            .into_iter()
            .collect();
    let mut n_questions = 0;
    let mut enumeration_count = 0;
    for t in transcripts {
        for turn in &t.turns {
            *types.entry(turn.q_type).or_default() += 1;
            *formats.entry(turn.q_format).or_default() += 1;
            n_questions += 1;
        }
        enumeration_count += detect_enumeration(t, enumeration_threshold).count;
    }
    let share = |c: usize| {
        if n_questions == 0 {
            0.0
        } else {
            c as f64 / n_questions as f64
        }
    };
    Ok(SummaryStats {
        n_games: n,
        successes,
        sr,
        sr_ci,
        anq,
        anq_ci,
        n_questions,
        type_ratios: types.into_iter().map(|(k, c)| (k, share(c))).collect(),
        format_ratios: formats.into_iter().map(|(k, c)| (k, share(c))).collect(),
        enumeration_count,
        enumeration_ratio: share(enumeration_count),
        errored_games: transcripts.iter().filter(|t| t.error.is_some()).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GameConfig, Outcome, TurnRecord, TurnVerdict};

    pub(crate) fn game(id: usize, turns: u32, success: bool) -> Transcript {
        let config = GameConfig::default();
        let turns: Vec<TurnRecord> = (1..=turns)
            .map(|t| {
                let last = success && t == turns;
                TurnRecord {
                    t,
                    question: if last {
                        "Is it a knife?".into()
                    } else {
                        format!("Is it used for task {t}?")
                    },
                    q_type: if last {
                        QuestionType::Direct
                    } else {
                        QuestionType::Function
                    },
                    q_format: QuestionFormat::Closed,
                    revision_count: 0,
                    constraint_violation: None,
                    answer: if last {
                        "Correct.".into()
                    } else {
                        "No.".into()
                    },
                    is_direct_guess: last,
                    verdict: if last {
                        TurnVerdict::Correct
                    } else {
                        TurnVerdict::Continue
                    },
                }
            })
            .collect();
        Transcript {
            game_id: format!("g{id}"),
            secret_object: "knife".into(),
            turn_count: turns.len() as u32,
            turns,
            config,
            outcome: if success {
                Outcome::Success
            } else {
                Outcome::Failure
            },
            error: None,
        }
    }

    #[test]
    fn degenerate_variance() {
        let games: Vec<_> = (0..4).map(|i| game(i, 5, true)).collect();
        let s = summarize(&games, 0.6).unwrap();
        assert_eq!((s.sr, s.anq, s.anq_ci), (1.0, Some(5.0), Some(0.0)));
        assert_eq!(s.sr_ci, 0.0);
        let total: f64 = s.type_ratios.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_successes_leaves_anq_absent() {
        let games: Vec<_> = (0..3).map(|i| game(i, 50, false)).collect();
        let s = summarize(&games, 0.6).unwrap();
        assert_eq!((s.sr, s.anq, s.anq_ci), (0.0, None, None));
        assert!(summarize(&[], 0.6).is_err());
    }
}
