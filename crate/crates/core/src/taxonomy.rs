//! Question-type taxonomy: a rule cascade for type and format, enumeration
//! detection, and classifier evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ModelError, PersistError};
use crate::model::{QuestionFormat, QuestionType, Transcript};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("classifier backend: {0}")]
    Backend(String),
    #[error("classifier returned an unrecognized label `{0}`")]
    Unrecognized(String),
}

/// Anything that assigns a question type: the rule cascade, an LLM checker,
/// or precomputed predictions.
pub trait QuestionClassifier: Send + Sync {
    fn classify(&self, question: &str) -> Result<QuestionType, ClassifierError>;
}

impl<T: QuestionClassifier + ?Sized> QuestionClassifier for &T {
    fn classify(&self, question: &str) -> Result<QuestionType, ClassifierError> {
        (**self).classify(question)
    }
}

impl<T: QuestionClassifier + ?Sized> QuestionClassifier for Box<T> {
    fn classify(&self, question: &str) -> Result<QuestionType, ClassifierError> {
        (**self).classify(question)
    }
}

impl<T: QuestionClassifier + ?Sized> QuestionClassifier for std::sync::Arc<T> {
    fn classify(&self, question: &str) -> Result<QuestionType, ClassifierError> {
        (**self).classify(question)
    }
}

/// The offline rule cascade.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleClassifier;

impl QuestionClassifier for RuleClassifier {
    fn classify(&self, question: &str) -> Result<QuestionType, ClassifierError> {
        Ok(classify_type(question))
    }
}

/// Removes a leading `<Speaker> said:` marker, case-insensitively.
pub fn strip_speaker<'a>(text: &'a str, speaker: &str) -> &'a str {
    let trimmed = text.trim_start();
    let marker = format!("{speaker} said:");
    match trimmed.get(..marker.len()) {
        Some(head) if head.eq_ignore_ascii_case(&marker) => trimmed[marker.len()..].trim(),
        _ => text.trim(),
    }
}

fn words(question: &str) -> Vec<String> {
    strip_speaker(question, "Guesser")
        .to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

fn has_phrase(words: &[String], phrase: &[&str]) -> bool {
    words
        .windows(phrase.len())
        .any(|w| w.iter().zip(phrase).all(|(a, b)| a == b))
}

const SUBJECTS: &[&[&str]] = &[
    &["it"],
    &["this"],
    &["the", "object"],
    &["this", "object"],
    &["your", "object"],
    &["the", "item"],
    &["the", "thing"],
];

const GUESS_VERBS: &[&str] = &["is", "could", "would", "might", "if"];

/// Nouns naming a class of objects rather than an object.
const CATEGORY_NOUNS: &[&str] = &[
    "accessory",
    "animal",
    "appliance",
    "apparatus",
    "beverage",
    "clothing",
    "container",
    "decoration",
    "device",
    "drink",
    "electronic",
    "electronics",
    "equipment",
    "food",
    "fruit",
    "furniture",
    "gadget",
    "garment",
    "instrument",
    "jewelry",
    "kitchenware",
    "machine",
    "machinery",
    "material",
    "plant",
    "product",
    "stationery",
    "tool",
    "toy",
    "utensil",
    "vegetable",
    "vehicle",
    "weapon",
];

/// Words that cannot sit inside a guessed object name.
const NON_GUESS_WORDS: &[&str] = &[
    "type",
    "kind",
    "sort",
    "form",
    "category",
    "class",
    "part",
    "piece",
    "thing",
    "object",
    "item",
    "something",
    "used",
    "made",
    "found",
    "located",
    "that",
    "which",
    "who",
    "for",
    "with",
    "of",
    "in",
    "on",
    "from",
    "to",
    "at",
    "bit",
    "little",
    "lot",
    "color",
    "colour",
];

/// `Is it a/an <np>?` and close variants. Returns the noun phrase.
fn guessed_phrase(words: &[String]) -> Option<&[String]> {
    let verb = words.first()?;
    if !GUESS_VERBS.contains(&verb.as_str()) {
        return None;
    }
    let rest = &words[1..];
    let subject = SUBJECTS
        .iter()
        .filter(|s| rest.len() > s.len() && rest.iter().zip(s.iter()).all(|(a, b)| a == b))
        .map(|s| s.len())
        .max()?;
    let mut rest = &rest[subject..];
    if rest.first().is_some_and(|w| w == "be") {
        rest = &rest[1..];
    }
    match rest.first().map(String::as_str) {
        Some("a" | "an") => {}
        _ => return None,
    }
    let np = &rest[1..];
    if np.is_empty() || np.len() > 4 {
        return None;
    }
    Some(np)
}

fn is_category_head(word: &str) -> bool {
    let singular = word.strip_suffix('s').unwrap_or(word);
    CATEGORY_NOUNS.contains(&word) || CATEGORY_NOUNS.contains(&singular)
}

const CATEGORY_PHRASES: &[&[&str]] = &[
    &["type", "of"],
    &["kind", "of"],
    &["sort", "of"],
    &["form", "of"],
    &["class", "of"],
    &["piece", "of"],
    &["category"],
    &["categories"],
    &["belong"],
    &["belongs"],
    &["classified"],
];

const LOCATION_WORDS: &[&str] = &[
    "where", "found", "located", "location", "locate", "kept", "stored", "indoors", "outdoors",
    "inside", "outside", "indoor", "outdoor", "room", "bedroom", "kitchen", "bathroom", "garage",
    "office", "house", "home", "desk", "garden", "yard", "shelf", "drawer", "closet", "school",
    "store", "street", "wall", "floor", "ceiling",
];

const LOCATION_PREPOSITIONS: &[&str] = &["in", "on", "under", "near", "at", "into", "inside"];
const DETERMINERS: &[&str] = &["a", "an", "the", "your", "my", "someone's", "people's"];

const FUNCTION_WORDS: &[&str] = &[
    "used",
    "use",
    "uses",
    "using",
    "purpose",
    "function",
    "functions",
    "designed",
    "serve",
    "serves",
    "helps",
    "help",
];

/// Classifies a question with a fixed cascade: Direct, Category, Location,
/// Function, then Attribute as the default. Total and deterministic.
pub fn classify_type(question: &str) -> QuestionType {
    let w = words(question);
    if let Some(np) = guessed_phrase(&w) {
        let blocked = np.iter().any(|x| NON_GUESS_WORDS.contains(&x.as_str()));
        let head = np.last().map(String::as_str).unwrap_or("");
        if !blocked && !is_category_head(head) {
            return QuestionType::Direct;
        }
        if is_category_head(head) {
            return QuestionType::Category;
        }
    }
    if CATEGORY_PHRASES.iter().any(|p| has_phrase(&w, p)) {
        return QuestionType::Category;
    }
    let located = w.iter().any(|x| LOCATION_WORDS.contains(&x.as_str()))
        || w.windows(2).any(|p| {
            LOCATION_PREPOSITIONS.contains(&p[0].as_str()) && DETERMINERS.contains(&p[1].as_str())
        });
    if located {
        return QuestionType::Location;
    }
    if w.iter().any(|x| FUNCTION_WORDS.contains(&x.as_str()))
        || has_phrase(&w, &["what", "is", "it", "for"])
        || has_phrase(&w, &["what", "does", "it", "do"])
    {
        return QuestionType::Function;
    }
    QuestionType::Attribute
}

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "do", "does", "did", "can", "could", "would", "will", "has",
    "have", "should", "must",
];

/// Closed iff the question opens with an auxiliary or copula.
pub fn classify_format(question: &str) -> QuestionFormat {
    match words(question).first() {
        Some(first) if AUXILIARIES.contains(&first.as_str()) => QuestionFormat::Closed,
        _ => QuestionFormat::Open,
    }
}

/// Type and format together; a direct guess is always closed.
pub fn classify(question: &str) -> (QuestionType, QuestionFormat) {
    let q_type = classify_type(question);
    let q_format = if q_type == QuestionType::Direct {
        QuestionFormat::Closed
    } else {
        classify_format(question)
    };
    (q_type, q_format)
}

/// Example questions given as gold labels for the five types, including the
/// checker and guesser prompt examples.
pub const CANONICAL_EXAMPLES: &[(&str, QuestionType)] = &[
    ("What color is the object?", QuestionType::Attribute),
    (
        "Is the object used for communication?",
        QuestionType::Function,
    ),
    (
        "Is the object typically found indoors?",
        QuestionType::Location,
    ),
    ("Is the object an instrument?", QuestionType::Category),
    ("Is the object a table?", QuestionType::Direct),
    ("Is the object made of metal?", QuestionType::Attribute),
    ("What shape is the object?", QuestionType::Attribute),
    ("Is the object used for building?", QuestionType::Function),
    (
        "Is the object used for eating food?",
        QuestionType::Function,
    ),
    ("Is the object in the bedroom?", QuestionType::Location),
    (
        "Is the object located inside or outside?",
        QuestionType::Location,
    ),
    ("Is the object on the desk?", QuestionType::Location),
    ("Is the object a type of car?", QuestionType::Category),
    ("If the object a type of furniture?", QuestionType::Category),
    ("Is the object a phone?", QuestionType::Direct),
    ("Is the object a bed?", QuestionType::Direct),
    ("Is the object a knife?", QuestionType::Direct),
    (
        "What material is the object made of?",
        QuestionType::Attribute,
    ),
    (
        "Is the material the object is made of copper?",
        QuestionType::Attribute,
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationStats {
    pub count: usize,
    pub ratio: f64,
}

/// Overlap at or above which a same-type follow-up counts as enumeration.
pub const DEFAULT_ENUMERATION_THRESHOLD: f64 = 0.6;

const ENUMERATION_STOPWORDS: &[&str] = &["a", "an", "the"];

fn content_tokens(question: &str) -> BTreeSet<String> {
    words(question)
        .into_iter()
        .filter(|w| !ENUMERATION_STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Overlap coefficient |A ∩ B| / min(|A|, |B|); 1 when both are empty.
pub fn token_overlap(a: &str, b: &str) -> f64 {
    let (a, b) = (content_tokens(a), content_tokens(b));
    let smaller = a.len().min(b.len());
    if smaller == 0 {
        return if a.len() == b.len() { 1.0 } else { 0.0 };
    }
    a.intersection(&b).count() as f64 / smaller as f64
}

/// Counts turns that repeat the previous turn's type with a lexically
/// similar question.
pub fn detect_enumeration(transcript: &Transcript, sim_threshold: f64) -> EnumerationStats {
    let turns = &transcript.turns;
    let count = turns
        .windows(2)
        .filter(|p| {
            p[0].q_type == p[1].q_type
                && token_overlap(&p[0].question, &p[1].question) >= sim_threshold
        })
        .count();
    let ratio = if turns.is_empty() {
        0.0
    } else {
        count as f64 / turns.len() as f64
    };
    EnumerationStats { count, ratio }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub n: u64,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_class: BTreeMap<QuestionType, ClassMetrics>,
    /// `confusion[gold][predicted]`
    pub confusion: BTreeMap<QuestionType, BTreeMap<QuestionType, u64>>,
}

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("no labeled questions")]
    Empty,
    #[error("question {index}: {source}")]
    Classifier {
        index: usize,
        #[source]
        source: ClassifierError,
    },
}

/// Report from `(gold, predicted)` pairs. Macro averages run over every class
/// that occurs as gold or prediction; an undefined ratio counts as 0.
pub fn report_from_pairs(
    pairs: &[(QuestionType, QuestionType)],
) -> Result<ClassifierReport, EvaluationError> {
    if pairs.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let mut confusion: BTreeMap<QuestionType, BTreeMap<QuestionType, u64>> = BTreeMap::new();
    let mut labels = BTreeSet::new();
    for (gold, pred) in pairs {
        *confusion
            .entry(*gold)
            .or_default()
            .entry(*pred)
            .or_default() += 1;
        labels.insert(*gold);
        labels.insert(*pred);
    }
    let cell = |g: QuestionType, p: QuestionType| -> u64 {
        confusion
            .get(&g)
            .and_then(|r| r.get(&p))
            .copied()
            .unwrap_or(0)
    };
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };

    let mut per_class = BTreeMap::new();
    for &label in &labels {
        let tp = cell(label, label);
        let predicted: u64 = labels.iter().map(|&g| cell(g, label)).sum();
        let support: u64 = labels.iter().map(|&p| cell(label, p)).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.insert(
            label,
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    let k = per_class.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.values().map(f).sum::<f64>() / k;
    let correct: u64 = labels.iter().map(|&l| cell(l, l)).sum();
    Ok(ClassifierReport {
        n: pairs.len() as u64,
        accuracy: ratio(correct, pairs.len() as u64),
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
        confusion,
    })
}

pub fn evaluate_classifier(
    labeled: &[(String, QuestionType)],
    classifier: &dyn QuestionClassifier,
) -> Result<ClassifierReport, EvaluationError> {
    let pairs = labeled
        .iter()
        .enumerate()
        .map(|(index, (q, gold))| {
            classifier
                .classify(q)
                .map(|pred| (*gold, pred))
                .map_err(|source| EvaluationError::Classifier { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    report_from_pairs(&pairs)
}

/// Reads `question \t label` lines. Blank lines and `#` comments are skipped.
pub fn read_labeled(reader: impl BufRead) -> Result<Vec<(String, QuestionType)>, PersistError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| PersistError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (question, label) = line
            .rsplit_once('\t')
            .ok_or_else(|| PersistError::Malformed {
                line: line_no,
                message: "expected `question<TAB>label`".into(),
            })?;
        let label: QuestionType =
            label
                .trim()
                .parse()
                .map_err(|source: ModelError| PersistError::Rejected {
                    line: line_no,
                    source,
                })?;
        out.push((question.trim().to_string(), label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GameConfig, Outcome, TurnRecord, TurnVerdict};
    use QuestionType::*;

    #[test]
    fn canonical_examples_all_correct() {
        for (q, gold) in CANONICAL_EXAMPLES {
            assert_eq!(classify_type(q), *gold, "{q}");
        }
    }

    #[test]
    fn format_examples() {
        assert_eq!(
            classify_format("What material is the object made of?"),
            QuestionFormat::Open
        );
        assert_eq!(classify_format("Is it metal?"), QuestionFormat::Closed);
        assert_eq!(classify_format("Where is it found?"), QuestionFormat::Open);
        assert_eq!(
            classify_format("Guesser said: Does it have wheels?"),
            QuestionFormat::Closed
        );
        assert_eq!(
            classify("Guesser said: Is it a spoon?"),
            (Direct, QuestionFormat::Closed)
        );
    }

    #[test]
    fn direct_guess_variants() {
        assert_eq!(classify_type("Guesser said: Is it an abacus?"), Direct);
        assert_eq!(classify_type("Could it be a toothbrush?"), Direct);
        assert_eq!(classify_type("Is it a tool?"), Category);
        assert_eq!(classify_type("Is it a piece of furniture?"), Category);
        assert_eq!(classify_type("Is it metal?"), Attribute);
        assert_eq!(classify_type("What is it used for?"), Function);
        assert_eq!(classify_type("Where is it found?"), Location);
        assert_eq!(classify_type(""), Attribute);
    }

    fn transcript(questions: &[(&str, QuestionType)]) -> Transcript {
        let turns: Vec<TurnRecord> = questions
            .iter()
            .enumerate()
            .map(|(i, (q, t))| TurnRecord {
                t: i as u32 + 1,
                question: q.to_string(),
                q_type: *t,
                q_format: QuestionFormat::Closed,
                revision_count: 0,
                constraint_violation: None,
                answer: "No.".into(),
                is_direct_guess: false,
                verdict: TurnVerdict::Continue,
            })
            .collect();
        Transcript {
            game_id: "g".into(),
            secret_object: "x".into(),
            config: GameConfig {
                t_max: turns.len() as u32,
                ..GameConfig::default()
            },
            turn_count: turns.len() as u32,
            turns,
            outcome: Outcome::Failure,
            error: None,
        }
    }

    #[test]
    fn enumeration_examples() {
        let t = transcript(&[
            ("Is it made in Ohio?", Attribute),
            ("Is it made in New York?", Attribute),
            ("Is it made in Germany?", Attribute),
        ]);
        let s = detect_enumeration(&t, 0.6);
        assert_eq!(s.count, 2);
        assert!((s.ratio - 2.0 / 3.0).abs() < 1e-15);

        let t = transcript(&[
            ("Is it red?", Attribute),
            ("Is it red?", Location),
            ("Is it red?", Attribute),
        ]);
        assert_eq!(detect_enumeration(&t, 0.6).count, 0);

        let t = transcript(&[("Is it red?", Attribute); 5]);
        assert_eq!(detect_enumeration(&t, 0.6).count, 4);
    }

    #[test]
    fn toy_confusion_arithmetic() {
        // gold A: 2 correct, 1 as F; gold F: 1 correct, 1 as L; gold L: 2 correct
        let pairs = [
            (Attribute, Attribute),
            (Attribute, Attribute),
            (Attribute, Function),
            (Function, Function),
            (Function, Location),
            (Location, Location),
            (Location, Location),
        ];
        let r = report_from_pairs(&pairs).unwrap();
        assert_eq!(r.accuracy, 5.0 / 7.0);
        // precision: A 2/2, F 1/2, L 2/3; recall: A 2/3, F 1/2, L 2/2
        let f1 = |p: f64, r: f64| 2.0 * p * r / (p + r);
        let macro_f1 = (f1(1.0, 2.0 / 3.0) + f1(0.5, 0.5) + f1(2.0 / 3.0, 1.0)) / 3.0;
        assert!((r.macro_f1 - macro_f1).abs() < 1e-15);
        assert!((r.macro_precision - (1.0 + 0.5 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
        assert_eq!(r.confusion[&Function][&Location], 1);
        assert_eq!(r.per_class[&Attribute].support, 3);
    }

    #[test]
    fn labeled_file_parsing() {
        let text = "# gold\nIs it red?\tattribute\n\nWhere is it?\tLocation\n";
        let rows = read_labeled(std::io::Cursor::new(text)).unwrap();
        assert_eq!(
            rows,
            vec![
                ("Is it red?".into(), Attribute),
                ("Where is it?".into(), Location)
            ]
        );
        let err = read_labeled(std::io::Cursor::new("Is it red?\tcolour\n")).unwrap_err();
        assert!(matches!(err, PersistError::Rejected { line: 1, .. }));
    }
}
