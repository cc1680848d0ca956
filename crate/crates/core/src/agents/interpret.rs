use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{normalize_name, ConceptScore};

/// Most pairs kept from one reply.
pub const MAX_CONCEPTS: usize = 5;
/// Magnitude that replaces scores at or beyond ±1.
pub const SCORE_LIMIT: f64 = 0.999;

/// Parsed Interpreter reply with counters for everything discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub scores: Vec<ConceptScore>,
    /// Tokens without a parseable `concept:score` shape, or with score 0.
    pub dropped: usize,
    pub clamped: usize,
    pub duplicates: usize,
    pub truncated: usize,
}

const JUNK: &[char] = &['{', '}', '[', ']', '"', '\'', '`'];

fn negate(concept: &str) -> String {
    match concept.strip_prefix("not ") {
        Some(inner) => inner.trim().to_string(),
        None => format!("not {concept}"),
    }
}

/// Parses `concept:score, concept:score, ...`.
///
/// Scores at or beyond ±1 are pulled to ±0.999, negative scores turn into
/// `not <concept>` with the absolute score, and a second mention of a concept
/// is ignored. At most [`MAX_CONCEPTS`] pairs are kept. Returns `None` when no
/// pair survives.
pub fn parse_interpretation(raw: &str) -> Option<Interpretation> {
    let mut out = Interpretation {
        scores: Vec::new(),
        dropped: 0,
        clamped: 0,
        duplicates: 0,
        truncated: 0,
    };
    let mut seen = BTreeSet::new();
    for token in raw.split([',', '\n']) {
        let token: String = token.chars().filter(|c| !JUNK.contains(c)).collect();
        let token = token.trim().trim_end_matches('.');
        if token.is_empty() {
            continue;
        }
        let Some((left, score)) = token.rsplit_once(':') else {
            out.dropped += 1;
            continue;
        };
        // "Concepts: metal:0.9" keeps only the part after the last label colon
        let concept = normalize_name(left.rsplit(':').next().unwrap_or(left));
        let score = match score.trim().parse::<f64>() {
            Ok(s) if s.is_finite() && s != 0.0 && !concept.is_empty() => s,
            _ => {
                out.dropped += 1;
                continue;
            }
        };
        let mut magnitude = score.abs();
        if magnitude >= 1.0 {
            magnitude = SCORE_LIMIT;
            out.clamped += 1;
        }
        let concept = if score < 0.0 {
            negate(&concept)
        } else {
            concept
        };
        if concept.is_empty() {
            out.dropped += 1;
            continue;
        }
        if !seen.insert(concept.clone()) {
            out.duplicates += 1;
            continue;
        }
        if out.scores.len() == MAX_CONCEPTS {
            out.truncated += 1;
            continue;
        }
        out.scores.push(ConceptScore::new(concept, magnitude));
    }
    if out.scores.is_empty() {
        None
    } else {
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(i: &Interpretation) -> Vec<(&str, f64)> {
        i.scores
            .iter()
            .map(|s| (s.concept.as_str(), s.score))
            .collect()
    }

    #[test]
    fn worked_reply() {
        let i = parse_interpretation("metal:0.9, steel:0.7, aluminum:0.6").unwrap();
        assert_eq!(
            pairs(&i),
            [("metal", 0.9), ("steel", 0.7), ("aluminum", 0.6)]
        );
    }

    #[test]
    fn negative_scores_become_negations() {
        let i = parse_interpretation("plastic:-0.8").unwrap();
        assert_eq!(pairs(&i), [("not plastic", 0.8)]);
        let i = parse_interpretation("not plastic:-0.5").unwrap();
        assert_eq!(pairs(&i), [("plastic", 0.5)]);
    }

    #[test]
    fn malformed_separator_is_empty() {
        assert!(parse_interpretation("metal;0.9").is_none());
        assert!(parse_interpretation("").is_none());
        assert!(parse_interpretation("metal:0").is_none());
    }

    #[test]
    fn clamps_dedupes_and_truncates() {
        let i = parse_interpretation(
            "Concepts: {Metal:1.0}, metal:0.2, b:-1, c:0.1, d:x, e:0.3, f:0.4, g:0.5.",
        )
        .unwrap();
        assert_eq!(
            pairs(&i),
            [
                ("metal", 0.999),
                ("not b", 0.999),
                ("c", 0.1),
                ("e", 0.3),
                ("f", 0.4)
            ]
        );
        assert_eq!(i.clamped, 2);
        assert_eq!(i.duplicates, 1);
        assert_eq!(i.dropped, 1);
        assert_eq!(i.truncated, 1);
    }

    proptest! {
        #[test]
        fn scores_stay_in_unit_interval(raw in ".{0,200}") {
            if let Some(i) = parse_interpretation(&raw) {
                prop_assert!(i.scores.len() <= MAX_CONCEPTS);
                for s in &i.scores {
                    prop_assert!(s.score > 0.0 && s.score <= 1.0, "{:?}", s);
                    prop_assert!(!s.concept.is_empty());
                }
            }
        }

        #[test]
        fn structured_replies(items in proptest::collection::vec(("[a-z]{1,6}", -3.0f64..3.0), 1..9)) {
            let raw: Vec<String> = items.iter().map(|(c, s)| format!("{c}:{s}")).collect();
            if let Some(i) = parse_interpretation(&raw.join(", ")) {
                for s in &i.scores {
                    prop_assert!(s.score > 0.0 && s.score <= 1.0);
                }
            }
        }
    }
}
