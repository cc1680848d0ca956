//! The turn loop: question, validation with revision, Oracle reply,
//! termination.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, AgentFactory, Exchange, Guesser, Oracle};
use crate::model::{
    normalize_name, GameConfig, IgRecord, Outcome, QuestionFormat, QuestionType, Transcript,
    TurnRecord, TurnVerdict,
};
use crate::scoring::{GameScorer, ScorerFactory};
use crate::taxonomy::{classify_format, strip_speaker, ClassifierError, QuestionClassifier};

pub const DEFAULT_REVISION_CAP: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameStatus {
    InProgress,
    Success,
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationReason {
    DisallowedType,
    RepeatLimitExceeded,
    ClosedUnderForcedOpen,
    TrivializingQuestion,
}

impl ViolationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationReason::DisallowedType => "DisallowedType",
            ViolationReason::RepeatLimitExceeded => "RepeatLimitExceeded",
            ViolationReason::ClosedUnderForcedOpen => "ClosedUnderForcedOpen",
            ViolationReason::TrivializingQuestion => "TrivializingQuestion",
        }
    }

    /// Feedback text handed to the Guesser on revision.
    pub fn describe(self) -> &'static str {
        match self {
            ViolationReason::DisallowedType => "this type of question is not allowed in this game",
            ViolationReason::RepeatLimitExceeded => "too many questions of the same type in a row",
            ViolationReason::ClosedUnderForcedOpen => "only open-ended questions are allowed",
            ViolationReason::TrivializingQuestion => "you may not ask what the object is called",
        }
    }
}

impl fmt::Display for ViolationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Violation(ViolationReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    pub verdict: Verdict,
    pub q_type: QuestionType,
    pub q_format: QuestionFormat,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("game is already over")]
    NotInProgress,
    #[error("guesser returned an empty question")]
    EmptyQuestion,
    #[error("checker: {0}")]
    Classifier(#[from] ClassifierError),
    #[error("{role}: {source}")]
    Agent {
        role: &'static str,
        #[source]
        source: AgentError,
    },
}

fn agent_err(role: &'static str) -> impl FnOnce(AgentError) -> EngineError {
    move |source| EngineError::Agent { role, source }
}

/// Meta-questions that would ask for the answer outright.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrivialFilter {
    phrases: BTreeSet<String>,
}

impl Default for TrivialFilter {
    fn default() -> Self {
        TrivialFilter::new([
            "what is the object",
            "what is it called",
            "what is the object called",
            "what is the name of the object",
            "what is its name",
        ])
    }
}

impl TrivialFilter {
    pub fn new<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TrivialFilter {
            phrases: phrases
                .into_iter()
                .map(|p| Self::normalize(p.as_ref()))
                .collect(),
        }
    }

    /// Lowercase, expand "what's", drop punctuation, collapse whitespace.
    pub fn normalize(text: &str) -> String {
        let lowered = text.to_lowercase().replace("what's", "what is");
        let cleaned: String = lowered
            .chars()
            .map(|c| {
                if c.is_alphanumeric() || c.is_whitespace() {
                    c
                } else {
                    ' '
                }
            })
            .collect();
        normalize_name(&cleaned)
    }

    pub fn is_trivial(&self, question: &str) -> bool {
        self.phrases.contains(&Self::normalize(question))
    }
}

/// True iff the Oracle reply, after its speaker marker, begins with "correct".
pub fn judge_oracle_reply(reply: &str) -> TurnVerdict {
    let residue = strip_speaker(reply, "Oracle")
        .trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .to_lowercase();
    if residue.starts_with("correct") {
        TurnVerdict::Correct
    } else {
        TurnVerdict::Continue
    }
}

/// Live state of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub config: GameConfig,
    pub secret: String,
    pub history: Vec<TurnRecord>,
    /// Type of the last accepted question and how many in a row shared it.
    pub run: Option<(QuestionType, u32)>,
    pub status: GameStatus,
}

impl GameState {
    pub fn new(config: GameConfig, secret: &str) -> Self {
        GameState {
            config,
            secret: normalize_name(secret),
            history: Vec::new(),
            run: None,
            status: GameStatus::InProgress,
        }
    }

    pub fn turn_count(&self) -> u32 {
        self.history.len() as u32
    }

    pub fn remaining(&self) -> u32 {
        self.config.t_max.saturating_sub(self.turn_count())
    }

    pub fn is_over(&self) -> bool {
        self.status != GameStatus::InProgress
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.history
            .iter()
            .map(|t| Exchange {
                question: t.question.clone(),
                answer: t.answer.clone(),
            })
            .collect()
    }

    /// Run length if a question of `q_type` were accepted next.
    pub fn run_after(&self, q_type: QuestionType) -> u32 {
        match self.run {
            Some((t, n)) if t == q_type => n + 1,
            _ => 1,
        }
    }

    fn push(&mut self, turn: TurnRecord) {
        self.run = Some((turn.q_type, self.run_after(turn.q_type)));
        if turn.verdict == TurnVerdict::Correct {
            self.status = GameStatus::Success;
        } else if self.turn_count() + 1 >= self.config.t_max {
            self.status = GameStatus::Failure;
        }
        self.history.push(turn);
    }

    /// Freezes the state into a transcript. An unfinished game becomes a
    /// Failure; `error` records why it stopped early.
    pub fn to_transcript(&self, game_id: &str, error: Option<String>) -> Transcript {
        Transcript {
            game_id: game_id.to_string(),
            secret_object: self.secret.clone(),
            config: self.config.clone(),
            turns: self.history.clone(),
            outcome: if self.status == GameStatus::Success {
                Outcome::Success
            } else {
                Outcome::Failure
            },
            turn_count: self.turn_count(),
            error,
        }
    }
}

/// Called once for every Oracle-answered turn.
pub trait TurnHook {
    fn on_turn(&mut self, turn: &TurnRecord) -> Option<IgRecord>;
}

impl TurnHook for GameScorer {
    fn on_turn(&mut self, turn: &TurnRecord) -> Option<IgRecord> {
        Some(self.score_turn(turn))
    }
}

/// Hook that scores nothing.
pub struct NoScoring;

impl TurnHook for NoScoring {
    fn on_turn(&mut self, _turn: &TurnRecord) -> Option<IgRecord> {
        None
    }
}

impl<H: TurnHook + ?Sized> TurnHook for &mut H {
    fn on_turn(&mut self, turn: &TurnRecord) -> Option<IgRecord> {
        (**self).on_turn(turn)
    }
}

/// What one human submission produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Submission {
    /// The question broke a rule; no turn was used.
    Rejected(Validation),
    Accepted {
        turn: TurnRecord,
        ig: Option<IgRecord>,
    },
}

/// A finished (or aborted) game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameRun {
    pub transcript: Transcript,
    pub ig: Vec<IgRecord>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    pub revision_cap: u32,
    pub trivial: TrivialFilter,
}

impl Default for Engine {
    fn default() -> Self {
        Engine {
            revision_cap: DEFAULT_REVISION_CAP,
            trivial: TrivialFilter::default(),
        }
    }
}

impl Engine {
    pub fn validate_question(
        &self,
        question: &str,
        state: &GameState,
        checker: &dyn QuestionClassifier,
    ) -> Result<Validation, EngineError> {
        let q_type = checker.classify(question)?;
        let q_format = if q_type == QuestionType::Direct {
            QuestionFormat::Closed
        } else {
            classify_format(question)
        };
        let config = &state.config;
        let reason = if self.trivial.is_trivial(question) {
            Some(ViolationReason::TrivializingQuestion)
        } else if !config.permits(q_type) {
            Some(ViolationReason::DisallowedType)
        } else if config
            .repeat_limit_k
            .is_some_and(|k| state.run_after(q_type) > k)
        {
            Some(ViolationReason::RepeatLimitExceeded)
        } else if config.forced_open
            && q_type != QuestionType::Direct
            && q_format != QuestionFormat::Open
        {
            Some(ViolationReason::ClosedUnderForcedOpen)
        } else {
            None
        };
        Ok(Validation {
            verdict: reason.map_or(Verdict::Valid, Verdict::Violation),
            q_type,
            q_format,
        })
    }

    fn accept(
        &self,
        state: &mut GameState,
        question: String,
        validation: Validation,
        revision_count: u32,
        oracle: &mut dyn Oracle,
        hook: &mut dyn TurnHook,
    ) -> Result<(TurnRecord, Option<IgRecord>), EngineError> {
        let raw = oracle
            .answer(&state.exchanges(), &question)
            .map_err(agent_err("oracle"))?;
        let answer = strip_speaker(&raw, "Oracle").trim().to_string();
        let is_direct_guess = validation.q_type == QuestionType::Direct;
        let verdict = if is_direct_guess {
            judge_oracle_reply(&answer)
        } else {
            TurnVerdict::Continue
        };
        let turn = TurnRecord {
            t: state.turn_count() + 1,
            question,
            q_type: validation.q_type,
            q_format: validation.q_format,
            revision_count,
            constraint_violation: match validation.verdict {
                Verdict::Violation(r) => Some(r.as_str().to_string()),
                Verdict::Valid => None,
            },
            answer,
            is_direct_guess,
            verdict,
        };
        state.push(turn.clone());
        let ig = hook.on_turn(&turn);
        Ok((turn, ig))
    }

    /// Plays one turn. A question still invalid after the revision cap is
    /// accepted with its violation recorded.
    pub fn step(
        &self,
        state: &mut GameState,
        guesser: &mut dyn Guesser,
        oracle: &mut dyn Oracle,
        checker: &dyn QuestionClassifier,
        hook: &mut dyn TurnHook,
    ) -> Result<(TurnRecord, Option<IgRecord>), EngineError> {
        if state.is_over() {
            return Err(EngineError::NotInProgress);
        }
        let history = state.exchanges();
        let mut feedback = None;
        let mut revisions = 0;
        loop {
            let raw = guesser
                .ask(&history, feedback)
                .map_err(agent_err("guesser"))?;
            let question = strip_speaker(&raw, "Guesser").trim().to_string();
            if question.is_empty() {
                return Err(EngineError::EmptyQuestion);
            }
            let validation = self.validate_question(&question, state, checker)?;
            match validation.verdict {
                Verdict::Violation(reason) if revisions < self.revision_cap => {
                    tracing::debug!(t = state.turn_count() + 1, %reason, %question, "revision requested");
                    revisions += 1;
                    feedback = Some(reason.describe());
                }
                _ => return self.accept(state, question, validation, revisions, oracle, hook),
            }
        }
    }

    /// Human-side turn: an invalid question is returned without using a turn.
    pub fn submit(
        &self,
        state: &mut GameState,
        question: &str,
        oracle: &mut dyn Oracle,
        checker: &dyn QuestionClassifier,
        hook: &mut dyn TurnHook,
    ) -> Result<Submission, EngineError> {
        if state.is_over() {
            return Err(EngineError::NotInProgress);
        }
        let question = question.trim();
        if question.is_empty() {
            return Err(EngineError::EmptyQuestion);
        }
        let validation = self.validate_question(question, state, checker)?;
        if validation.verdict != Verdict::Valid {
            return Ok(Submission::Rejected(validation));
        }
        let (turn, ig) = self.accept(state, question.to_string(), validation, 0, oracle, hook)?;
        Ok(Submission::Accepted { turn, ig })
    }

    /// Plays a whole game. Agent failures end the game early; the partial
    /// transcript carries the error.
    pub fn run_game(
        &self,
        game_id: &str,
        config: &GameConfig,
        secret: &str,
        agents: &dyn AgentFactory,
        scorers: Option<&ScorerFactory>,
    ) -> GameRun {
        let mut state = GameState::new(config.clone(), secret);
        let mut ig = Vec::new();
        let mut scorer = scorers.map(|f| f.scorer(game_id));
        let checker = agents.checker();
        let agents_ready = agents
            .guesser(game_id, config.forced_open)
            .map_err(agent_err("guesser"))
            .and_then(|g| {
                Ok((
                    g,
                    agents
                        .oracle(game_id, &state.secret)
                        .map_err(agent_err("oracle"))?,
                ))
            });
        let (mut guesser, mut oracle) = match agents_ready {
            Ok(pair) => pair,
            Err(e) => {
                return GameRun {
                    transcript: state.to_transcript(game_id, Some(e.to_string())),
                    ig,
                }
            }
        };
        let mut error = None;
        while !state.is_over() {
            let hook: &mut dyn TurnHook = match scorer.as_mut() {
                Some(s) => s,
                None => &mut NoScoring,
            };
            match self.step(
                &mut state,
                guesser.as_mut(),
                oracle.as_mut(),
                checker.as_ref(),
                hook,
            ) {
                Ok((_, record)) => ig.extend(record),
                Err(e) => {
                    tracing::warn!(game = game_id, t = state.turn_count() + 1, error = %e, "game aborted");
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        GameRun {
            transcript: state.to_transcript(game_id, error),
            ig,
        }
    }

    /// Runs one game per secret on `workers` threads. Results keep the input
    /// order and game ids are `game-0001`, `game-0002`, ...
    pub fn run_batch(
        &self,
        config: &GameConfig,
        secrets: &[String],
        agents: &dyn AgentFactory,
        scorers: Option<&ScorerFactory>,
        workers: usize,
    ) -> Result<Vec<GameRun>, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()?;
        Ok(pool.install(|| {
            secrets
                .par_iter()
                .enumerate()
                .map(|(i, secret)| self.run_game(&game_id(i), config, secret, agents, scorers))
                .collect()
        }))
    }
}

pub fn game_id(index: usize) -> String {
    format!("game-{:04}", index + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{LlmGuesser, LlmOracle, ScriptedBackend};
    use crate::taxonomy::RuleClassifier;

    fn scripted(questions: &[&str]) -> LlmGuesser<ScriptedBackend> {
        LlmGuesser::new(ScriptedBackend::new(questions.iter().copied()), false)
    }

    fn oracle(replies: &[&str]) -> LlmOracle<ScriptedBackend> {
        LlmOracle::new(ScriptedBackend::new(replies.iter().copied()), "knife")
    }

    #[test]
    fn judge_examples() {
        assert_eq!(
            judge_oracle_reply("Oracle said: Correct."),
            TurnVerdict::Correct
        );
        assert_eq!(
            judge_oracle_reply("Oracle said: No, it is not."),
            TurnVerdict::Continue
        );
        assert_eq!(judge_oracle_reply("  CORRECT "), TurnVerdict::Correct);
        assert_eq!(judge_oracle_reply("Incorrect."), TurnVerdict::Continue);
    }

    #[test]
    fn validation_examples() {
        let e = Engine::default();
        let state = GameState::new(GameConfig::default(), "knife");
        let v = e
            .validate_question("What is the object?", &state, &RuleClassifier)
            .unwrap();
        assert_eq!(
            v.verdict,
            Verdict::Violation(ViolationReason::TrivializingQuestion)
        );
        assert!(e.trivial.is_trivial("what's  the OBJECT??"));

        let cfg = GameConfig {
            forced_open: true,
            ..GameConfig::default()
        };
        let state = GameState::new(cfg, "knife");
        let v = e
            .validate_question("Is it metal?", &state, &RuleClassifier)
            .unwrap();
        assert_eq!(
            v.verdict,
            Verdict::Violation(ViolationReason::ClosedUnderForcedOpen)
        );
        assert_eq!(
            (v.q_type, v.q_format),
            (QuestionType::Attribute, QuestionFormat::Closed)
        );
        let v = e
            .validate_question("Is it a knife?", &state, &RuleClassifier)
            .unwrap();
        assert_eq!(v.verdict, Verdict::Valid);

        let cfg = GameConfig {
            repeat_limit_k: Some(1),
            ..GameConfig::default()
        };
        let mut state = GameState::new(cfg, "knife");
        state.run = Some((QuestionType::Attribute, 1));
        let v = e
            .validate_question("What color is it?", &state, &RuleClassifier)
            .unwrap();
        assert_eq!(
            v.verdict,
            Verdict::Violation(ViolationReason::RepeatLimitExceeded)
        );
    }

    #[test]
    fn direct_guess_wins() {
        let e = Engine::default();
        let mut state = GameState::new(GameConfig::default(), "knife");
        let (turn, _) = e
            .step(
                &mut state,
                &mut scripted(&["Guesser said: Is it a knife?"]),
                &mut oracle(&["Oracle said: Correct."]),
                &RuleClassifier,
                &mut NoScoring,
            )
            .unwrap();
        assert_eq!(turn.verdict, TurnVerdict::Correct);
        assert_eq!(turn.answer, "Correct.");
        assert_eq!(state.status, GameStatus::Success);
        assert!(matches!(
            e.step(
                &mut state,
                &mut scripted(&[]),
                &mut oracle(&[]),
                &RuleClassifier,
                &mut NoScoring
            ),
            Err(EngineError::NotInProgress)
        ));
    }

    #[test]
    fn correct_reply_to_a_non_guess_continues() {
        let e = Engine::default();
        let mut state = GameState::new(GameConfig::default(), "knife");
        let (turn, _) = e
            .step(
                &mut state,
                &mut scripted(&["Is it sharp?"]),
                &mut oracle(&["Correct, it is sharp."]),
                &RuleClassifier,
                &mut NoScoring,
            )
            .unwrap();
        assert_eq!(turn.verdict, TurnVerdict::Continue);
        assert_eq!(state.status, GameStatus::InProgress);
    }

    #[test]
    fn revisions_do_not_use_turns() {
        let cfg = GameConfig {
            allowed_types: [QuestionType::Attribute].into_iter().collect(),
            ..GameConfig::default()
        };
        let e = Engine::default();
        let mut state = GameState::new(cfg.clone(), "knife");
        let (turn, _) = e
            .step(
                &mut state,
                &mut scripted(&[
                    "Where is it found?",
                    "What is it used for?",
                    "What color is it?",
                ]),
                &mut oracle(&["It is silver."]),
                &RuleClassifier,
                &mut NoScoring,
            )
            .unwrap();
        assert_eq!((turn.t, turn.revision_count), (1, 2));
        assert_eq!(turn.constraint_violation, None);
        assert_eq!(state.turn_count(), 1);

        // cap reached: the fourth attempt is accepted with its flag
        let mut state = GameState::new(cfg, "knife");
        let (turn, _) = e
            .step(
                &mut state,
                &mut scripted(&[
                    "Where is it?",
                    "Where is it?",
                    "Where is it?",
                    "Where is it?",
                    "unused",
                ]),
                &mut oracle(&["In the kitchen."]),
                &RuleClassifier,
                &mut NoScoring,
            )
            .unwrap();
        assert_eq!(turn.revision_count, 3);
        assert_eq!(turn.constraint_violation.as_deref(), Some("DisallowedType"));
    }

    #[test]
    fn human_violation_keeps_the_turn() {
        let e = Engine::default();
        let mut state = GameState::new(GameConfig::default(), "knife");
        let mut o = oracle(&["Correct."]);
        let r = e.submit(
            &mut state,
            "What is the object?",
            &mut o,
            &RuleClassifier,
            &mut NoScoring,
        );
        assert!(matches!(
            r.unwrap(),
            Submission::Rejected(Validation {
                verdict: Verdict::Violation(ViolationReason::TrivializingQuestion),
                ..
            })
        ));
        assert_eq!(state.turn_count(), 0);
        let r = e
            .submit(
                &mut state,
                "Is it a knife?",
                &mut o,
                &RuleClassifier,
                &mut NoScoring,
            )
            .unwrap();
        assert!(
            matches!(r, Submission::Accepted { ref turn, .. } if turn.verdict == TurnVerdict::Correct)
        );
    }
}
