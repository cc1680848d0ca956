//! Domain records shared by the engine, the scorers, the analyses and the
//! service: question taxonomy enums, game configuration, turn and transcript
//! records, per-turn information-gain records and the object corpus.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// The five axes of inquiry a question can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuestionType {
    Attribute,
    Function,
    Location,
    Category,
    Direct,
}

impl QuestionType {
    pub const ALL: [QuestionType; 5] = [
        QuestionType::Attribute,
        QuestionType::Function,
        QuestionType::Location,
        QuestionType::Category,
        QuestionType::Direct,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::Attribute => "Attribute",
            QuestionType::Function => "Function",
            QuestionType::Location => "Location",
            QuestionType::Category => "Category",
            QuestionType::Direct => "Direct",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lowered = s.trim().to_ascii_lowercase();
        QuestionType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(&lowered))
            .ok_or_else(|| ModelError::UnknownLabel(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuestionFormat {
    Open,
    Closed,
}

impl fmt::Display for QuestionFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuestionFormat::Open => f.write_str("Open"),
            QuestionFormat::Closed => f.write_str("Closed"),
        }
    }
}

/// Experiment knobs for one game. Every game in a run shares one config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub t_max: u32,
    /// Information-seeking types the Guesser may use. Direct guesses are
    /// always permitted regardless of this set.
    pub allowed_types: BTreeSet<QuestionType>,
    /// Maximum number of consecutive questions of one type.
    pub repeat_limit_k: Option<u32>,
    pub forced_open: bool,
    pub temperature: f64,
    pub interpreter_alpha: f64,
    pub prune_fraction: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub seed: u64,
    /// Replace the empty turn-1 prior with a uniform prior over the first
    /// evidence when measuring KL. Off by default.
    pub seed_uniform_first_turn: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            t_max: 50,
            allowed_types: QuestionType::ALL.into_iter().collect(),
            repeat_limit_k: None,
            forced_open: false,
            temperature: 0.6,
            interpreter_alpha: 1.0,
            prune_fraction: 0.35,
            epsilon: 1e-12,
            tau: 0.60,
            seed: 0,
            seed_uniform_first_turn: false,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| Err(ModelError::InvalidConfig(reason.to_string()));
        if self.t_max == 0 {
            return bad("t_max must be at least 1");
        }
        if self.allowed_types.is_empty() {
            return bad("allowed_types must not be empty");
        }
        if self.repeat_limit_k == Some(0) {
            return bad("repeat_limit_k must be positive when set");
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return bad("temperature must be positive");
        }
        if !(self.interpreter_alpha > 0.0) || !self.interpreter_alpha.is_finite() {
            return bad("interpreter_alpha must be positive");
        }
        if !(0.0..1.0).contains(&self.prune_fraction) {
            return bad("prune_fraction must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon must be positive");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        Ok(())
    }

    /// Whether a question type passes the allowed-type restriction.
    pub fn permits(&self, q_type: QuestionType) -> bool {
        q_type == QuestionType::Direct || self.allowed_types.contains(&q_type)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TurnVerdict {
    Continue,
    Correct,
}

/// One Oracle-answered question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub t: u32,
    pub question: String,
    pub q_type: QuestionType,
    pub q_format: QuestionFormat,
    pub revision_count: u32,
    pub constraint_violation: Option<String>,
    pub answer: String,
    pub is_direct_guess: bool,
    pub verdict: TurnVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub game_id: String,
    pub secret_object: String,
    pub config: GameConfig,
    pub turns: Vec<TurnRecord>,
    pub outcome: Outcome,
    pub turn_count: u32,
    /// Set when the game was cut short by an agent or transport failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Transcript {
    /// Checks the structural invariants every persisted transcript must hold.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: String| Err(ModelError::InvalidTranscript(reason));
        if self.turn_count as usize != self.turns.len() {
            return bad(format!(
                "turn_count {} does not match {} recorded turns",
                self.turn_count,
                self.turns.len()
            ));
        }
        if self.turn_count > self.config.t_max {
            return bad(format!(
                "turn_count {} exceeds t_max {}",
                self.turn_count, self.config.t_max
            ));
        }
        let mut previous = 0;
        for (i, turn) in self.turns.iter().enumerate() {
            if turn.t <= previous {
                return bad(format!("turn index {} is not strictly increasing", turn.t));
            }
            previous = turn.t;
            if turn.verdict == TurnVerdict::Correct {
                if !turn.is_direct_guess {
                    return bad(format!("turn {} is Correct but not a direct guess", turn.t));
                }
                if i + 1 != self.turns.len() {
                    return bad(format!("Correct verdict on non-final turn {}", turn.t));
                }
            }
        }
        let last_correct = self
            .turns
            .last()
            .is_some_and(|t| t.verdict == TurnVerdict::Correct);
        match self.outcome {
            Outcome::Success if !last_correct => {
                bad("outcome Success without a final Correct verdict".into())
            }
            Outcome::Failure if last_correct => {
                bad("outcome Failure despite a final Correct verdict".into())
            }
            Outcome::Failure if self.error.is_none() && self.turn_count != self.config.t_max => {
                bad(format!(
                    "outcome Failure after {} turns without reaching t_max {}",
                    self.turn_count, self.config.t_max
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }
}

/// Information gain of one turn under both metrics.
///
/// `bayes_ig` is in nats (KL divergence), `entropy_ig` in bits (log2 of the
/// candidate-set shrinkage).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgRecord {
    pub game_id: String,
    pub t: u32,
    pub bayes_ig: f64,
    pub entropy_ig: f64,
    pub candidates_before: u64,
    pub candidates_after: u64,
    /// Concepts carrying belief mass after pruning.
    pub belief_support: u64,
    /// Concepts carrying belief mass before pruning.
    pub belief_support_unpruned: u64,
    /// The Interpreter produced no usable evidence (bayes_ig forced to 0).
    #[serde(default)]
    pub bayes_skipped: bool,
    /// No matched assertion, an empty intersection, or an embedding failure
    /// left the candidate set unchanged.
    #[serde(default)]
    pub entropy_skipped: bool,
}

/// A concept and the strength of evidence for it, as produced by the
/// Interpreter after negation relabeling. Scores lie in (0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptScore {
    pub concept: String,
    pub score: f64,
}

impl ConceptScore {
    pub fn new(concept: impl Into<String>, score: f64) -> Self {
        ConceptScore {
            concept: concept.into(),
            score,
        }
    }
}

/// Normalizes an object or concept name: trim, lowercase, collapse runs of
/// internal whitespace to one space.
pub fn normalize_name(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A de-duplicated list of secret objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectCorpus {
    objects: Vec<String>,
}

impl ObjectCorpus {
    /// Builds a corpus from raw names, normalizing and dropping repeats while
    /// keeping first occurrences in order.
    pub fn from_names<I, S>(names: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = BTreeSet::new();
        let mut objects = Vec::new();
        for name in names {
            let normalized = normalize_name(name.as_ref());
            if normalized.is_empty() {
                continue;
            }
            if seen.insert(normalized.clone()) {
                objects.push(normalized);
            }
        }
        if objects.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        Ok(ObjectCorpus { objects })
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        let normalized = normalize_name(name);
        self.objects.iter().any(|o| *o == normalized)
    }

    /// SHA-256 over the normalized names joined by newlines, hex encoded.
    pub fn content_hash(&self) -> String {
        crate::io::sha256_hex(self.objects.join("\n").as_bytes())
    }
}
