use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AssertionIndex, AssertionKey, ConceptNetError, ObjectId};

/// The remaining candidate objects, as sorted object ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    members: Vec<ObjectId>,
}

impl CandidateSet {
    /// Every object in the index.
    pub fn all(index: &AssertionIndex) -> Self {
        CandidateSet {
            members: (0..index.objects().len() as ObjectId).collect(),
        }
    }

    /// Objects of `vocabulary` that occur in the index. Unknown names are ignored.
    pub fn restricted<I, S>(index: &AssertionIndex, vocabulary: I) -> Result<Self, ConceptNetError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let members: BTreeSet<ObjectId> = vocabulary
            .into_iter()
            .filter_map(|name| index.object_id(name.as_ref()))
            .collect();
        if members.is_empty() {
            return Err(ConceptNetError::EmptyVocabulary);
        }
        Ok(CandidateSet {
            members: members.into_iter().collect(),
        })
    }

    pub fn from_ids(ids: impl IntoIterator<Item = ObjectId>) -> Self {
        let mut members: Vec<ObjectId> = ids.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        CandidateSet { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn ids(&self) -> &[ObjectId] {
        &self.members
    }

    pub fn names<'a>(&'a self, index: &'a AssertionIndex) -> impl Iterator<Item = &'a str> + 'a {
        self.members.iter().map(move |id| index.object_name(*id))
    }

    pub fn is_subset(&self, other: &CandidateSet) -> bool {
        self.members.iter().all(|id| other.contains(*id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutcome {
    pub set: CandidateSet,
    /// True when nothing matched or the union was empty; `set` is then the input.
    pub skipped: bool,
}

/// Narrows `d` to the union of the yes-sets of `matched`, intersected with `d`.
pub fn filter_candidates(
    d: &CandidateSet,
    matched: &[AssertionKey],
    index: &AssertionIndex,
) -> FilterOutcome {
    let unchanged = || FilterOutcome {
        set: d.clone(),
        skipped: true,
    };
    if matched.is_empty() {
        return unchanged();
    }
    let mut union = BTreeSet::new();
    for key in matched {
        union.extend(index.yes_set(key).into_iter().filter(|id| d.contains(*id)));
    }
    if union.is_empty() {
        return unchanged();
    }
    FilterOutcome {
        set: CandidateSet {
            members: union.into_iter().collect(),
        },
        skipped: false,
    }
}

/// Entropy drop in bits for a uniform distribution shrinking from `before` to `after`.
pub fn entropy_ig(before: u64, after: u64) -> Result<f64, ConceptNetError> {
    if after == 0 || after > before {
        return Err(ConceptNetError::InvalidCounts { before, after });
    }
    Ok(libm::log2(before as f64) - libm::log2(after as f64))
}
