use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Assertion, ConceptNetError};
use crate::error::PersistError;
use crate::io::sha256_hex;

pub type ObjectId = u32;
pub type RelationId = u16;

/// A `(relation, concept)` pair implied by an answer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AssertionKey {
    pub relation: String,
    pub concept: String,
}

impl AssertionKey {
    pub fn new(relation: impl Into<String>, concept: impl Into<String>) -> Self {
        AssertionKey {
            relation: relation.into(),
            concept: concept.into(),
        }
    }
}

/// Immutable concept-keyed view of the whitelisted triples.
///
/// Object ids are dense and assigned in lexicographic order of object names,
/// so the index is identical regardless of dump row order.
#[derive(Debug, Clone, PartialEq)]
pub struct AssertionIndex {
    relations: Vec<String>,
    objects: Vec<String>,
    object_ids: HashMap<String, ObjectId>,
    /// concept -> sorted, de-duplicated (relation, object) pairs
    by_concept: BTreeMap<String, Vec<(RelationId, ObjectId)>>,
    concept_labels: Vec<String>,
}

impl AssertionIndex {
    pub fn from_assertions(assertions: impl IntoIterator<Item = Assertion>) -> Self {
        let triples: BTreeSet<Assertion> = assertions.into_iter().collect();
        let relations: Vec<String> = triples
            .iter()
            .map(|a| a.relation.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let objects: Vec<String> = triples
            .iter()
            .map(|a| a.object.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let relation_ids: HashMap<&str, RelationId> = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.as_str(), i as RelationId))
            .collect();
        let object_ids: HashMap<String, ObjectId> = objects
            .iter()
            .enumerate()
            .map(|(i, o)| (o.clone(), i as ObjectId))
            .collect();

        let mut by_concept: BTreeMap<String, Vec<(RelationId, ObjectId)>> = BTreeMap::new();
        for a in &triples {
            by_concept
                .entry(a.concept.clone())
                .or_default()
                .push((relation_ids[a.relation.as_str()], object_ids[&a.object]));
        }
        for pairs in by_concept.values_mut() {
            pairs.sort_unstable();
            pairs.dedup();
        }
        let concept_labels = by_concept.keys().cloned().collect();
        AssertionIndex {
            relations,
            objects,
            object_ids,
            by_concept,
            concept_labels,
        }
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn object_name(&self, id: ObjectId) -> &str {
        &self.objects[id as usize]
    }

    pub fn object_id(&self, name: &str) -> Option<ObjectId> {
        self.object_ids.get(name).copied()
    }

    pub fn concept_labels(&self) -> &[String] {
        &self.concept_labels
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    /// Distinct relations with at least one edge ending in `concept`.
    pub fn relations_for(&self, concept: &str) -> Vec<&str> {
        let Some(pairs) = self.by_concept.get(concept) else {
            return Vec::new();
        };
        let mut ids: Vec<RelationId> = pairs.iter().map(|(r, _)| *r).collect();
        ids.dedup();
        ids.into_iter()
            .map(|r| self.relations[r as usize].as_str())
            .collect()
    }

    /// Sorted ids of every object `o` with `(relation, o, concept)` indexed.
    pub fn yes_set(&self, key: &AssertionKey) -> Vec<ObjectId> {
        let Some(relation) = self.relations.iter().position(|r| *r == key.relation) else {
            return Vec::new();
        };
        let relation = relation as RelationId;
        self.by_concept
            .get(&key.concept)
            .map(|pairs| {
                pairs
                    .iter()
                    .filter(|(r, _)| *r == relation)
                    .map(|(_, o)| *o)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Every indexed triple in (concept, relation, object) order.
    pub fn assertions(&self) -> impl Iterator<Item = Assertion> + '_ {
        self.by_concept.iter().flat_map(move |(concept, pairs)| {
            pairs.iter().map(move |(r, o)| Assertion {
                relation: self.relations[*r as usize].clone(),
                object: self.objects[*o as usize].clone(),
                concept: concept.clone(),
            })
        })
    }

    /// SHA-256 over the sorted triples, one `relation\tobject\tconcept` line each.
    pub fn content_hash(&self) -> String {
        let mut lines: Vec<String> = self
            .assertions()
            .map(|a| format!("{}\t{}\t{}\n", a.relation, a.object, a.concept))
            .collect();
        lines.sort();
        sha256_hex(lines.concat().as_bytes())
    }

    pub fn to_file(&self) -> IndexFile {
        let mut triples: Vec<[String; 3]> = self
            .assertions()
            .map(|a| [a.relation, a.object, a.concept])
            .collect();
        triples.sort();
        IndexFile {
            schema_version: IndexFile::SCHEMA_VERSION,
            content_hash: self.content_hash(),
            relations: self.relations.clone(),
            triples,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ConceptNetError> {
        let text = serde_json::to_string(&self.to_file()).map_err(PersistError::from)?;
        std::fs::write(path, text).map_err(|e| PersistError::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConceptNetError> {
        let text = std::fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
        let file: IndexFile = serde_json::from_str(&text).map_err(PersistError::from)?;
        file.into_index()
    }
}

/// On-disk form of an index: the sorted triples plus their content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFile {
    pub schema_version: u32,
    pub content_hash: String,
    pub relations: Vec<String>,
    pub triples: Vec<[String; 3]>,
}

impl IndexFile {
    pub const SCHEMA_VERSION: u32 = 1;

    pub fn into_index(self) -> Result<AssertionIndex, ConceptNetError> {
        if self.schema_version != Self::SCHEMA_VERSION {
            return Err(ConceptNetError::SchemaVersion(self.schema_version));
        }
        let index = AssertionIndex::from_assertions(self.triples.into_iter().map(
            |[relation, object, concept]| Assertion {
                relation,
                object,
                concept,
            },
        ));
        let actual = index.content_hash();
        if actual != self.content_hash {
            return Err(ConceptNetError::HashMismatch {
                expected: self.content_hash,
                actual,
            });
        }
        Ok(index)
    }
}
