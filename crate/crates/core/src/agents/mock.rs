//! A small deterministic world for offline games: twenty objects with five
//! facts each, a Guesser that reasons over them, a fact-answering Oracle and
//! a rule-based Interpreter backend.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use super::{
    AgentError, AgentFactory, ChatBackend, ChatMessage, Exchange, Guesser, Interpreter,
    LlmInterpreter, Oracle,
};
use crate::model::{normalize_name, GameConfig, QuestionFormat, QuestionType};
use crate::taxonomy::{QuestionClassifier, RuleClassifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockObject {
    pub name: &'static str,
    pub material: &'static str,
    pub color: &'static str,
    pub function: &'static str,
    pub location: &'static str,
    pub category: &'static str,
}

const fn obj(
    name: &'static str,
    material: &'static str,
    color: &'static str,
    function: &'static str,
    location: &'static str,
    category: &'static str,
) -> MockObject {
    MockObject {
        name,
        material,
        color,
        function,
        location,
        category,
    }
}

/// The secret objects of the mock corpus.
pub const WORLD: [MockObject; 20] = [
    obj("knife", "metal", "silver", "cutting", "kitchen", "utensil"),
    obj(
        "spoon",
        "metal",
        "silver",
        "eating soup",
        "kitchen",
        "utensil",
    ),
    obj("fork", "metal", "silver", "eating", "kitchen", "utensil"),
    obj(
        "mug",
        "ceramic",
        "white",
        "drinking coffee",
        "kitchen",
        "container",
    ),
    obj(
        "pillow", "cotton", "white", "sleeping", "bedroom", "bedding",
    ),
    obj(
        "lamp",
        "glass",
        "yellow",
        "lighting",
        "bedroom",
        "appliance",
    ),
    obj("bed", "wood", "white", "sleeping", "bedroom", "furniture"),
    obj("hammer", "steel", "gray", "building", "garage", "tool"),
    obj(
        "screwdriver",
        "steel",
        "red",
        "turning screws",
        "garage",
        "tool",
    ),
    obj("bicycle", "aluminum", "red", "riding", "garage", "vehicle"),
    obj(
        "pencil",
        "wood",
        "yellow",
        "writing",
        "office",
        "stationery",
    ),
    obj(
        "stapler",
        "metal",
        "black",
        "binding paper",
        "office",
        "stationery",
    ),
    obj(
        "phone",
        "plastic",
        "black",
        "communication",
        "office",
        "device",
    ),
    obj(
        "chair",
        "wood",
        "brown",
        "sitting",
        "dining room",
        "furniture",
    ),
    obj(
        "table",
        "wood",
        "brown",
        "eating meals",
        "dining room",
        "furniture",
    ),
    obj(
        "guitar",
        "wood",
        "brown",
        "making music",
        "living room",
        "instrument",
    ),
    obj("abacus", "wood", "brown", "counting", "classroom", "tool"),
    obj("towel", "cotton", "blue", "drying", "bathroom", "linen"),
    obj(
        "toothbrush",
        "plastic",
        "blue",
        "brushing teeth",
        "bathroom",
        "toiletry",
    ),
    obj(
        "umbrella",
        "nylon",
        "black",
        "staying dry",
        "closet",
        "accessory",
    ),
];

/// Extra graph-only objects that widen the initial candidate set.
pub const DISTRACTORS: [MockObject; 20] = [
    obj("scissors", "metal", "silver", "cutting", "office", "tool"),
    obj("plate", "ceramic", "white", "eating", "kitchen", "dish"),
    obj("bowl", "ceramic", "white", "eating soup", "kitchen", "dish"),
    obj(
        "cup",
        "ceramic",
        "white",
        "drinking coffee",
        "kitchen",
        "container",
    ),
    obj(
        "sofa",
        "cotton",
        "brown",
        "sitting",
        "living room",
        "furniture",
    ),
    obj("desk", "wood", "brown", "writing", "office", "furniture"),
    obj("pen", "plastic", "blue", "writing", "office", "stationery"),
    obj(
        "wrench",
        "steel",
        "silver",
        "turning bolts",
        "garage",
        "tool",
    ),
    obj("saw", "steel", "silver", "cutting", "garage", "tool"),
    obj(
        "blanket", "cotton", "blue", "sleeping", "bedroom", "bedding",
    ),
    obj(
        "mirror",
        "glass",
        "silver",
        "reflecting",
        "bathroom",
        "furniture",
    ),
    obj(
        "comb",
        "plastic",
        "black",
        "grooming hair",
        "bathroom",
        "toiletry",
    ),
    obj(
        "laptop",
        "plastic",
        "black",
        "computing",
        "office",
        "device",
    ),
    obj(
        "radio",
        "plastic",
        "black",
        "communication",
        "living room",
        "device",
    ),
    obj(
        "piano",
        "wood",
        "black",
        "making music",
        "living room",
        "instrument",
    ),
    obj(
        "violin",
        "wood",
        "brown",
        "making music",
        "living room",
        "instrument",
    ),
    obj("car", "metal", "red", "driving", "garage", "vehicle"),
    obj(
        "kettle",
        "metal",
        "silver",
        "boiling water",
        "kitchen",
        "appliance",
    ),
    obj(
        "candle",
        "wax",
        "white",
        "lighting",
        "living room",
        "decoration",
    ),
    obj("broom", "wood", "brown", "sweeping", "closet", "tool"),
];

/// World objects the mock Guesser has no knowledge of; games on these run
/// to the turn limit.
pub const UNKNOWN_TO_GUESSER: [&str; 4] = ["abacus", "stapler", "umbrella", "towel"];

const PLACES: [&str; 10] = [
    "Ohio", "New York", "Germany", "China", "Japan", "Texas", "France", "Italy", "Mexico", "Canada",
];

const TRIVIAL: [&str; 2] = ["What is the object?", "What is it called?"];

pub fn mock_corpus() -> Vec<&'static str> {
    WORLD.iter().map(|o| o.name).collect()
}

pub fn find_object(name: &str) -> Option<&'static MockObject> {
    let name = normalize_name(name);
    WORLD
        .iter()
        .chain(DISTRACTORS.iter())
        .find(|o| o.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Material,
    Color,
    Function,
    Location,
    Category,
}

impl Slot {
    pub const ALL: [Slot; 5] = [
        Slot::Material,
        Slot::Color,
        Slot::Function,
        Slot::Location,
        Slot::Category,
    ];

    pub fn q_type(self) -> QuestionType {
        match self {
            Slot::Material | Slot::Color => QuestionType::Attribute,
            Slot::Function => QuestionType::Function,
            Slot::Location => QuestionType::Location,
            Slot::Category => QuestionType::Category,
        }
    }

    pub fn value(self, o: &MockObject) -> &'static str {
        match self {
            Slot::Material => o.material,
            Slot::Color => o.color,
            Slot::Function => o.function,
            Slot::Location => o.location,
            Slot::Category => o.category,
        }
    }

    pub fn open_question(self) -> &'static str {
        match self {
            Slot::Material => "What material is the object made of?",
            Slot::Color => "What color is the object?",
            Slot::Function => "What is the object used for?",
            Slot::Location => "Where is the object usually found?",
            Slot::Category => "What kind of thing is the object?",
        }
    }

    pub fn closed_question(self, value: &str) -> String {
        match self {
            Slot::Material => format!("Is the object made of {value}?"),
            Slot::Color => format!("Is the object {value}?"),
            Slot::Function => format!("Is the object used for {value}?"),
            Slot::Location => format!("Is the object found in the {value}?"),
            Slot::Category => format!("Is the object a type of {value}?"),
        }
    }

    fn statement(self, value: &str) -> String {
        match self {
            Slot::Material => format!("It is made of {value}."),
            Slot::Color => format!("It is {value}."),
            Slot::Function => format!("It is used for {value}."),
            Slot::Location => format!("It is usually found in the {value}."),
            Slot::Category => format!("It is a kind of {value}."),
        }
    }

    fn denial(self, value: &str) -> String {
        match self {
            Slot::Material => format!("No, it is not made of {value}."),
            Slot::Color => format!("No, it is not {value}."),
            Slot::Function => format!("No, it is not used for {value}."),
            Slot::Location => format!("No, it is not found in the {value}."),
            Slot::Category => format!("No, it is not a kind of {value}."),
        }
    }
}

pub fn direct_question(name: &str) -> String {
    let article = if name.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    };
    format!("Is it {article} {name}?")
}

/// ConceptNet-style dump for every mock and distractor object, with a few
/// rows the ingester must filter or reject.
pub fn mock_conceptnet_dump() -> String {
    let rel = [
        ("MadeOf", Slot::Material),
        ("HasProperty", Slot::Color),
        ("UsedFor", Slot::Function),
        ("AtLocation", Slot::Location),
        ("IsA", Slot::Category),
    ];
    let uri = |s: &str| format!("/c/en/{}", s.replace(' ', "_"));
    let mut out = String::new();
    let mut n = 0;
    for o in WORLD.iter().chain(DISTRACTORS.iter()) {
        for (r, slot) in rel {
            n += 1;
            let (start, end) = (uri(o.name), uri(slot.value(o)));
            out.push_str(&format!(
                "/a/{n}\t/r/{r}\t{start}/n\t{end}\t{{\"dataset\": \"/d/mock\", \"weight\": 1.0}}\n"
            ));
        }
    }
    out.push_str("/a/x1\t/r/Antonym\t/c/en/hot\t/c/en/cold\t{}\n");
    out.push_str("/a/x2\t/r/IsA\t/c/fr/couteau\t/c/fr/outil\t{}\n");
    out.push_str("/a/x3\t/r/IsA\t/c/en/knife\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Pending {
    None,
    Trivial,
    Open(Slot),
    Closed(Slot, &'static str),
    Direct(String),
    Enumeration,
}

impl Pending {
    fn q_type(&self) -> Option<QuestionType> {
        match self {
            Pending::Open(s) | Pending::Closed(s, _) => Some(s.q_type()),
            Pending::Direct(_) => Some(QuestionType::Direct),
            Pending::Enumeration => Some(QuestionType::Attribute),
            Pending::None | Pending::Trivial => None,
        }
    }
}

/// Fact-based Guesser. It narrows its own candidate list from the Oracle's
/// answers, sometimes ignores an answer, sometimes asks a trivializing or
/// rule-breaking question, and guesses once few candidates remain.
pub struct MockGuesser {
    config: GameConfig,
    rng: ChaCha8Rng,
    candidates: Vec<&'static MockObject>,
    guessed: BTreeSet<String>,
    accepted: Vec<QuestionType>,
    absorbed: usize,
    pending: Pending,
    compliance: f64,
    forget: f64,
}

fn seed_for(seed: u64, game_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in game_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}

impl MockGuesser {
    pub fn new(config: GameConfig, game_id: &str) -> Self {
        let candidates = WORLD
            .iter()
            .filter(|o| !UNKNOWN_TO_GUESSER.contains(&o.name))
            .collect();
        MockGuesser {
            rng: ChaCha8Rng::seed_from_u64(seed_for(config.seed, game_id)),
            config,
            candidates,
            guessed: BTreeSet::new(),
            accepted: Vec::new(),
            absorbed: 0,
            pending: Pending::None,
            compliance: 0.8,
            forget: 0.2,
        }
    }

    /// Probability that a question respects the game constraints before any
    /// checker feedback. 0 gives a guesser that ignores them entirely.
    pub fn with_compliance(mut self, p: f64) -> Self {
        self.compliance = p;
        self
    }

    fn absorb(&mut self, history: &[Exchange]) {
        if history.len() <= self.absorbed {
            return;
        }
        self.absorbed = history.len();
        let answer = normalize_name(&history[history.len() - 1].answer.to_lowercase());
        let pending = std::mem::replace(&mut self.pending, Pending::None);
        if let Some(t) = pending.q_type() {
            self.accepted.push(t);
        }
        if let Pending::Direct(name) = &pending {
            self.candidates.retain(|o| o.name != name);
            self.guessed.insert(name.clone());
            return;
        }
        if self.rng.random::<f64>() < self.forget {
            return;
        }
        let padded = format!(" {} ", answer.replace(['.', ','], " "));
        let mentions = |v: &str| padded.contains(&format!(" {v} "));
        let yes = answer.starts_with("yes");
        let before = self.candidates.clone();
        match pending {
            Pending::Open(slot) => self.candidates.retain(|o| mentions(slot.value(o))),
            Pending::Closed(slot, v) if yes => self.candidates.retain(|o| slot.value(o) == v),
            Pending::Closed(slot, v) if answer.starts_with("no") => {
                self.candidates.retain(|o| slot.value(o) != v)
            }
            _ => {}
        }
        if self.candidates.is_empty() && matches!(pending, Pending::Open(_)) {
            // an answer outside what the guesser knows is ignored
            self.candidates = before;
        }
    }

    fn run_of(&self, t: QuestionType) -> u32 {
        let run = self.accepted.iter().rev().take_while(|x| **x == t).count() as u32;
        run + 1
    }

    fn permitted(&self, t: QuestionType, format: QuestionFormat) -> bool {
        self.config.permits(t)
            && self
                .config
                .repeat_limit_k
                .is_none_or(|k| self.run_of(t) <= k)
            && (!self.config.forced_open
                || t == QuestionType::Direct
                || format == QuestionFormat::Open)
    }

    fn direct(&mut self) -> (Pending, String) {
        let pick = self
            .candidates
            .choose(&mut self.rng)
            .map(|o| o.name.to_string());
        let name = pick.unwrap_or_else(|| {
            let pool: Vec<&str> = DISTRACTORS
                .iter()
                .map(|o| o.name)
                .filter(|n| !self.guessed.contains(*n))
                .collect();
            pool.choose(&mut self.rng)
                .copied()
                .unwrap_or("rock")
                .to_string()
        });
        let q = direct_question(&name);
        (Pending::Direct(name), q)
    }

    fn informative_slots(&self) -> Vec<Slot> {
        Slot::ALL
            .into_iter()
            .filter(|s| {
                let values: BTreeSet<_> = self.candidates.iter().map(|o| s.value(o)).collect();
                values.len() > 1
            })
            .collect()
    }

    fn choose(&mut self, revision: bool) -> (Pending, String) {
        if !revision && self.rng.random::<f64>() < 0.05 {
            return (Pending::Trivial, TRIVIAL[0].into());
        }
        if revision && self.pending == Pending::Trivial && self.rng.random::<f64>() < 0.5 {
            return (Pending::Trivial, TRIVIAL[1].into());
        }
        let comply = self.rng.random::<f64>() < if revision { 0.9 } else { self.compliance };

        let n = self.candidates.len();
        let wants_guess = n == 1 || (n > 0 && n <= 3 && self.rng.random::<f64>() < 0.6);
        if wants_guess && (!comply || self.permitted(QuestionType::Direct, QuestionFormat::Closed))
        {
            return self.direct();
        }
        if n == 0 {
            if self.rng.random::<f64>() < 0.5
                && (!comply || self.permitted(QuestionType::Attribute, QuestionFormat::Closed))
            {
                let place = PLACES.choose(&mut self.rng).expect("non-empty");
                return (Pending::Enumeration, format!("Is it made in {place}?"));
            }
            return self.direct();
        }

        let mut options: Vec<(Slot, QuestionFormat)> = Vec::new();
        let slots = match self.informative_slots() {
            s if s.is_empty() => Slot::ALL.to_vec(),
            s => s,
        };
        for slot in slots {
            for format in [QuestionFormat::Open, QuestionFormat::Closed] {
                if !comply || self.permitted(slot.q_type(), format) {
                    options.push((slot, format));
                }
            }
        }
        let Some(&(slot, format)) = options.choose(&mut self.rng) else {
            return self.direct();
        };
        // closed questions are more common than open ones
        let format = if !comply && self.rng.random::<f64>() < 0.3 {
            QuestionFormat::Open
        } else {
            format
        };
        match format {
            QuestionFormat::Open => (Pending::Open(slot), slot.open_question().into()),
            QuestionFormat::Closed => {
                let value = slot.value(self.candidates.choose(&mut self.rng).expect("n > 0"));
                (Pending::Closed(slot, value), slot.closed_question(value))
            }
        }
    }
}

impl Guesser for MockGuesser {
    fn ask(&mut self, history: &[Exchange], feedback: Option<&str>) -> Result<String, AgentError> {
        if feedback.is_none() {
            self.absorb(history);
        }
        let (pending, question) = self.choose(feedback.is_some());
        self.pending = pending;
        Ok(question)
    }
}

/// Answers from the secret's facts. Unknown secrets only recognize a direct
/// guess of their own name.
pub struct MockOracle {
    secret: String,
    facts: Option<&'static MockObject>,
    patterns: OraclePatterns,
}

struct OraclePatterns {
    direct: Regex,
    closed: [(Slot, Regex); 5],
}

impl OraclePatterns {
    fn new() -> Self {
        let re = |s: &str| Regex::new(s).expect("static pattern");
        OraclePatterns {
            direct: re(
                r"^(?:is|could|would|might) (?:it|the object|this)(?: be)? an? ([a-z][a-z ]*?)\??$",
            ),
            closed: [
                (
                    Slot::Material,
                    re(r"^is (?:it|the object) made of ([a-z ]+?)\??$"),
                ),
                (
                    Slot::Function,
                    re(r"^is (?:it|the object) used for ([a-z ]+?)\??$"),
                ),
                (
                    Slot::Location,
                    re(r"^is (?:it|the object) (?:found )?in the ([a-z ]+?)\??$"),
                ),
                (
                    Slot::Category,
                    re(r"^is (?:it|the object) a (?:type|kind) of ([a-z ]+?)\??$"),
                ),
                (Slot::Color, re(r"^is (?:it|the object) ([a-z]+)\??$")),
            ],
        }
    }
}

impl MockOracle {
    pub fn new(secret: &str) -> Self {
        MockOracle {
            secret: normalize_name(secret),
            facts: find_object(secret),
            patterns: OraclePatterns::new(),
        }
    }

    fn reply(&self, question: &str) -> String {
        let q = normalize_name(question).trim_end_matches('?').to_string();
        let q = q.as_str();
        if let Some(c) = self.patterns.direct.captures(q) {
            let guess = c[1].trim();
            let is_slot_question = ["made of", "used for", "type of", "kind of"]
                .iter()
                .any(|p| guess.contains(p));
            if !is_slot_question {
                return if guess == self.secret {
                    "Correct.".into()
                } else {
                    format!(
                        "No, it is not {}.",
                        direct_question(guess)[6..].trim_end_matches('?')
                    )
                };
            }
        }
        let Some(o) = self.facts else {
            return "I am not sure.".into();
        };
        if q.contains("made in") {
            return "I do not know where it was made.".into();
        }
        for (slot, re) in &self.patterns.closed {
            if let Some(c) = re.captures(q) {
                let v = c[1].trim();
                if *slot == Slot::Color && !is_color(v) {
                    continue;
                }
                return if v == slot.value(o) {
                    format!("Yes, {}", lowercase_first(&slot.statement(v)))
                } else {
                    slot.denial(v)
                };
            }
        }
        for slot in Slot::ALL {
            let open = normalize_name(slot.open_question());
            if q == open.trim_end_matches('?') {
                return slot.statement(slot.value(o));
            }
        }
        if q.starts_with("where") {
            return Slot::Location.statement(o.location);
        }
        if q.contains("used for") || q.contains("purpose") {
            return Slot::Function.statement(o.function);
        }
        "I am not sure.".into()
    }
}

fn lowercase_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

fn is_color(v: &str) -> bool {
    WORLD.iter().chain(DISTRACTORS.iter()).any(|o| o.color == v)
}

impl Oracle for MockOracle {
    fn answer(&mut self, _history: &[Exchange], question: &str) -> Result<String, AgentError> {
        Ok(format!("Oracle said: {}", self.reply(question)))
    }
}

fn vocabulary() -> Vec<&'static str> {
    let mut v: Vec<&'static str> = WORLD
        .iter()
        .chain(DISTRACTORS.iter())
        .flat_map(|o| Slot::ALL.map(|s| s.value(o)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // longest first so "eating soup" wins over "eating"
    v.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    v
}

fn association(value: &str) -> Option<&'static str> {
    Some(match value {
        "metal" | "steel" | "aluminum" => "hard",
        "wood" => "natural",
        "plastic" => "man-made",
        "glass" | "ceramic" => "fragile",
        "cotton" | "nylon" => "soft",
        "kitchen" | "bedroom" | "bathroom" | "living room" | "dining room" => "household",
        "tool" | "utensil" => "handheld",
        _ => return None,
    })
}

/// Chat backend that plays the Interpreter by spotting known fact values in
/// the answer. Output follows the `concept:score` reply format.
#[derive(Debug, Default)]
pub struct MockInterpreterBackend;

impl MockInterpreterBackend {
    pub fn reply(question: &str, answer: &str) -> String {
        let a = normalize_name(&answer.to_lowercase().replace(['.', ',', '!', '?'], " "));
        let a = a.strip_prefix("oracle said: ").unwrap_or(&a).to_string();
        let q = normalize_name(&question.to_lowercase().replace(['.', ',', '!', '?'], " "));
        if a.starts_with("correct") {
            let name = q.rsplit(' ').next().unwrap_or("");
            return format!("{name}:1.0");
        }
        if a.contains("metallic") {
            return "metal:0.9, steel:0.7, aluminum:0.6".into();
        }
        let padded = format!(" {a} ");
        let mut found: Vec<&str> = Vec::new();
        let mut rest = padded.clone();
        for v in vocabulary() {
            let needle = format!(" {v} ");
            if rest.contains(&needle) {
                found.push(v);
                rest = rest.replace(&needle, " ");
            }
        }
        let negative = a.starts_with("no ") || a.contains(" not ");
        if found.is_empty() && negative {
            // a rejected direct guess names the object in the question
            if let Some(name) = q
                .strip_prefix("is it a ")
                .or_else(|| q.strip_prefix("is it an "))
            {
                return format!("{name}:-0.9");
            }
        }
        if found.is_empty() {
            return "none".into();
        }
        let mut parts = Vec::new();
        for (i, v) in found.iter().enumerate() {
            if negative {
                parts.push(format!("{v}:-0.8"));
            } else {
                let score = [0.9, 0.7, 0.5].get(i).copied().unwrap_or(0.5);
                parts.push(format!("{v}:{score}"));
                if let Some(assoc) = association(v) {
                    parts.push(format!("{assoc}:0.4"));
                }
            }
        }
        parts.join(", ")
    }
}

impl ChatBackend for MockInterpreterBackend {
    fn chat(&self, _system: &str, messages: &[ChatMessage]) -> Result<String, AgentError> {
        let last = messages.last().ok_or(AgentError::EmptyReply)?;
        let (q, a) = last
            .content
            .split_once('\n')
            .ok_or_else(|| AgentError::Protocol("expected `Question: ...\\nAnswer: ...`".into()))?;
        let q = q.trim_start_matches("Question:").trim();
        let a = a.trim_start_matches("Answer:").trim();
        Ok(Self::reply(q, a))
    }
}

/// Offline agents over the mock world.
pub struct MockAgents {
    config: GameConfig,
    compliance: f64,
    checker: Arc<dyn QuestionClassifier>,
    interpreter: Arc<dyn Interpreter>,
}

impl MockAgents {
    pub fn new(config: GameConfig) -> Self {
        MockAgents {
            config,
            compliance: 0.8,
            checker: Arc::new(RuleClassifier),
            interpreter: Arc::new(LlmInterpreter::new(MockInterpreterBackend)),
        }
    }

    pub fn with_compliance(mut self, p: f64) -> Self {
        self.compliance = p;
        self
    }
}

impl AgentFactory for MockAgents {
    fn guesser(&self, game_id: &str, _forced_open: bool) -> Result<Box<dyn Guesser>, AgentError> {
        Ok(Box::new(
            MockGuesser::new(self.config.clone(), game_id).with_compliance(self.compliance),
        ))
    }

    fn oracle(&self, _game_id: &str, secret: &str) -> Result<Box<dyn Oracle>, AgentError> {
        Ok(Box::new(MockOracle::new(secret)))
    }

    fn checker(&self) -> Arc<dyn QuestionClassifier> {
        self.checker.clone()
    }

    fn interpreter(&self) -> Arc<dyn Interpreter> {
        self.interpreter.clone()
    }
}
