//! Per-turn information gain under both metrics.

use std::sync::Arc;

use crate::agents::{InterpretError, Interpreter};
use crate::belief::{BeliefParams, BeliefState};
use crate::conceptnet::{
    entropy_ig, filter_candidates, match_assertions, AssertionIndex, CandidateSet, ConceptMatcher,
    Embedder,
};
use crate::model::{GameConfig, IgRecord, Transcript, TurnRecord};

/// Shared, read-only inputs of the entropy metric.
pub struct EntropyContext {
    pub index: Arc<AssertionIndex>,
    pub matcher: Arc<ConceptMatcher>,
    pub embedder: Arc<dyn Embedder>,
    /// The candidate set every game starts from.
    pub initial: CandidateSet,
}

impl EntropyContext {
    /// Embeds every concept label once. `initial` defaults to all objects.
    pub fn new(
        index: Arc<AssertionIndex>,
        embedder: Arc<dyn Embedder>,
        initial: Option<CandidateSet>,
    ) -> Self {
        let matcher = Arc::new(ConceptMatcher::build(&index, embedder.as_ref()));
        let initial = initial.unwrap_or_else(|| CandidateSet::all(&index));
        EntropyContext {
            index,
            matcher,
            embedder,
            initial,
        }
    }
}

/// Builds one scorer per game with the same parameters.
#[derive(Clone)]
pub struct ScorerFactory {
    pub params: BeliefParams,
    pub tau: f64,
    /// `None` skips the Bayesian metric.
    pub interpreter: Option<Arc<dyn Interpreter>>,
    pub entropy: Option<Arc<EntropyContext>>,
}

impl ScorerFactory {
    pub fn new(
        config: &GameConfig,
        interpreter: Arc<dyn Interpreter>,
        entropy: Option<Arc<EntropyContext>>,
    ) -> Self {
        ScorerFactory {
            params: BeliefParams::from(config),
            tau: config.tau,
            interpreter: Some(interpreter),
            entropy,
        }
    }

    /// Scores only the candidate-set metric; no Interpreter calls.
    pub fn entropy_only(config: &GameConfig, entropy: Arc<EntropyContext>) -> Self {
        ScorerFactory {
            params: BeliefParams::from(config),
            tau: config.tau,
            interpreter: None,
            entropy: Some(entropy),
        }
    }

    pub fn scorer(&self, game_id: &str) -> GameScorer {
        GameScorer {
            game_id: game_id.to_string(),
            belief: BeliefState::empty(self.params),
            tau: self.tau,
            interpreter: self.interpreter.clone(),
            candidates: self.entropy.as_ref().map(|e| e.initial.clone()),
            entropy: self.entropy.clone(),
        }
    }
}

/// Belief and candidate-set state of one game.
pub struct GameScorer {
    game_id: String,
    belief: BeliefState,
    tau: f64,
    interpreter: Option<Arc<dyn Interpreter>>,
    entropy: Option<Arc<EntropyContext>>,
    candidates: Option<CandidateSet>,
}

impl GameScorer {
    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    pub fn candidates(&self) -> Option<&CandidateSet> {
        self.candidates.as_ref()
    }

    /// Scores one answered question and advances the state. Agent or
    /// embedding failures score 0 with the matching skip flag set.
    pub fn score(&mut self, t: u32, question: &str, answer: &str) -> IgRecord {
        let interpreted = self
            .interpreter
            .as_ref()
            .map(|i| i.interpret(question, answer));
        let (bayes_ig, belief_support_unpruned, bayes_skipped) = match interpreted {
            None => (0.0, self.belief.len() as u64, true),
            Some(Ok(interp)) => {
                let step = self.belief.score_turn(&interp.scores);
                self.belief = step.posterior;
                (step.ig, step.support_unpruned as u64, false)
            }
            Some(Err(err)) => {
                match &err {
                    InterpretError::EmptyInterpretation { .. } => {
                        tracing::debug!(game = %self.game_id, t, "no concepts in interpreter reply")
                    }
                    InterpretError::Agent(e) => {
                        tracing::warn!(game = %self.game_id, t, error = %e, "interpreter failed")
                    }
                }
                (0.0, self.belief.len() as u64, true)
            }
        };

        let (entropy_bits, before, after, entropy_skipped) = match (
            &self.entropy,
            &mut self.candidates,
        ) {
            (Some(ctx), Some(d)) => {
                let before = d.len() as u64;
                match match_assertions(
                    answer,
                    &ctx.index,
                    &ctx.matcher,
                    ctx.embedder.as_ref(),
                    self.tau,
                ) {
                    Ok(keys) => {
                        let out = filter_candidates(d, &keys, &ctx.index);
                        let after = out.set.len() as u64;
                        *d = out.set;
                        let bits = entropy_ig(before, after)
                            .expect("filter never grows or empties the set");
                        (bits, before, after, out.skipped)
                    }
                    Err(err) => {
                        tracing::warn!(game = %self.game_id, t, error = %err, "embedding failed");
                        (0.0, before, before, true)
                    }
                }
            }
            _ => (0.0, 0, 0, true),
        };

        IgRecord {
            game_id: self.game_id.clone(),
            t,
            bayes_ig,
            entropy_ig: entropy_bits,
            candidates_before: before,
            candidates_after: after,
            belief_support: self.belief.len() as u64,
            belief_support_unpruned,
            bayes_skipped,
            entropy_skipped,
        }
    }

    pub fn score_turn(&mut self, turn: &TurnRecord) -> IgRecord {
        self.score(turn.t, &turn.question, &turn.answer)
    }
}

/// Replays a recorded game through a fresh scorer. No Guesser or Oracle is
/// involved, so this serves human dialogues as well as live runs.
pub fn score_transcript(transcript: &Transcript, factory: &ScorerFactory) -> Vec<IgRecord> {
    let mut scorer = factory.scorer(&transcript.game_id);
    transcript
        .turns
        .iter()
        .map(|turn| scorer.score_turn(turn))
        .collect()
}

/// Per-game mean of one IG series, in transcript order of `records`.
pub fn mean_ig(records: &[IgRecord], metric: impl Fn(&IgRecord) -> f64) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    Some(records.iter().map(metric).sum::<f64>() / records.len() as f64)
}
