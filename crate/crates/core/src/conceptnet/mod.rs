//! Knowledge-graph candidate filtering.
//!
//! A ConceptNet assertion dump is reduced to English triples
//! `(relation, object, concept)` over a relation whitelist and indexed by
//! concept. Oracle answers are matched to concept labels by embedding
//! similarity, each matched `(relation, concept)` pair selects a yes-set of
//! objects, and the candidate set shrinks to the union of those yes-sets.

mod candidates;
pub mod embedding;
mod index;
mod ingest;

pub use candidates::{entropy_ig, filter_candidates, CandidateSet, FilterOutcome};
pub use embedding::{
    cosine, CachedEmbedder, ConceptMatcher, Embedder, EmbeddingError, EmbeddingVector,
    HashingEmbedder, HttpEmbedder, TableEmbedder,
};
pub use index::{AssertionIndex, AssertionKey, IndexFile, ObjectId, RelationId};
pub use ingest::{ingest, Assertion, IngestReport, RelationWhitelist, RowDiagnostic};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConceptNetError {
    #[error("read error at line {line}: {source}")]
    Read {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("the dump contained no rows")]
    EmptyDump,
    #[error("no assertion survived the relation whitelist and language filter")]
    NoAssertions,
    #[error(
        "candidate counts must satisfy 1 <= after <= before (got before={before}, after={after})"
    )]
    InvalidCounts { before: u64, after: u64 },
    #[error("none of the supplied vocabulary occurs as an object in the index")]
    EmptyVocabulary,
    #[error("unsupported index schema_version {0}")]
    SchemaVersion(u32),
    #[error("index content hash mismatch: file records {expected}, triples hash to {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error("index file: {0}")]
    Persist(#[from] crate::error::PersistError),
}

/// Relations kept by default: taxonomy, material, purpose, properties,
/// location, parts and capabilities.
pub const DEFAULT_RELATIONS: [&str; 7] = [
    "IsA",
    "MadeOf",
    "UsedFor",
    "HasProperty",
    "AtLocation",
    "PartOf",
    "CapableOf",
];

/// Matches an answer against every concept label and returns the distinct
/// `(relation, concept)` pairs of concepts whose similarity reaches `tau`.
pub fn match_assertions(
    answer: &str,
    index: &AssertionIndex,
    matcher: &ConceptMatcher,
    embedder: &dyn Embedder,
    tau: f64,
) -> Result<Vec<AssertionKey>, EmbeddingError> {
    let vector = embedder.embed(answer)?;
    if vector.norm() == 0.0 {
        return Ok(Vec::new());
    }
    let mut keys = Vec::new();
    for concept in matcher.similar(&vector, tau) {
        for relation in index.relations_for(concept) {
            keys.push(AssertionKey {
                relation: relation.to_string(),
                concept: concept.to_string(),
            });
        }
    }
    Ok(keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    const DUMP: &str = "\
/a/1\t/r/HasProperty\t/c/en/knife\t/c/en/sharp\t{}
/a/2\t/r/UsedFor\t/c/en/knife/n\t/c/en/cutting\t{}
/a/3\t/r/HasProperty\t/c/en/scissors\t/c/en/sharp/a\t{}
/a/4\t/r/UsedFor\t/c/en/spoon\t/c/en/eating_soup\t{}
/a/5\t/r/HasProperty\t/c/en/pillow\t/c/en/soft\t{}
";

    fn fixture() -> AssertionIndex {
        ingest(Cursor::new(DUMP), &RelationWhitelist::default())
            .unwrap()
            .0
    }

    #[test]
    fn exact_answer_matches_its_concept() {
        let index = fixture();
        let embedder = HashingEmbedder::default();
        let matcher = ConceptMatcher::build(&index, &embedder);
        let keys = match_assertions("It is sharp", &index, &matcher, &embedder, 0.60).unwrap();
        assert!(keys.contains(&AssertionKey::new("HasProperty", "sharp")));
        assert!(
            match_assertions("It is sharp", &index, &matcher, &embedder, 1.01)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn threshold_selects_fixture_concepts() {
        // Unit vectors with cosines 0.71, 0.65, 0.12 against the answer.
        let s = |c: f64| (1.0 - c * c).sqrt();
        let table = format!(
            "the answer\t1,0,0,0\nsharp\t0.71,{},0,0\ncutting\t0.65,0,{},0\nsoft\t0.12,0,0,{}\n\
             eating soup\t0,1,0,0\n",
            s(0.71),
            s(0.65),
            s(0.12)
        );
        let embedder = TableEmbedder::from_tsv(Cursor::new(table)).unwrap();
        let index = fixture();
        let matcher = ConceptMatcher::build(&index, &embedder);
        let keys = match_assertions("the answer", &index, &matcher, &embedder, 0.60).unwrap();
        assert_eq!(
            keys,
            vec![
                AssertionKey::new("UsedFor", "cutting"),
                AssertionKey::new("HasProperty", "sharp"),
            ]
        );
    }
}
