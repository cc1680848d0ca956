use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{AssertionIndex, ConceptNetError, DEFAULT_RELATIONS};
use crate::model::normalize_name;

/// One English triple: `object --relation--> concept`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assertion {
    pub relation: String,
    pub object: String,
    pub concept: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationWhitelist(BTreeSet<String>);

impl RelationWhitelist {
    /// Accepts bare names (`IsA`) or relation URIs (`/r/IsA`).
    pub fn new<I, S>(relations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        RelationWhitelist(
            relations
                .into_iter()
                .map(|r| r.as_ref().trim().trim_start_matches("/r/").to_string())
                .filter(|r| !r.is_empty())
                .collect(),
        )
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.0.contains(relation)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Default for RelationWhitelist {
    fn default() -> Self {
        RelationWhitelist::new(DEFAULT_RELATIONS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    pub kept: usize,
    pub duplicates: usize,
    pub filtered_relation: usize,
    pub filtered_language: usize,
    pub malformed: Vec<RowDiagnostic>,
    pub per_relation: BTreeMap<String, usize>,
}

enum Row {
    Keep(Assertion),
    NotWhitelisted,
    NotEnglish,
}

/// Parses a ConceptNet CSV dump (tab-separated: assertion URI, relation URI,
/// start URI, end URI, JSON metadata) into an index. Malformed rows are
/// reported with their line number and skipped.
pub fn ingest(
    reader: impl BufRead,
    whitelist: &RelationWhitelist,
) -> Result<(AssertionIndex, IngestReport), ConceptNetError> {
    let mut report = IngestReport::default();
    let mut triples = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| ConceptNetError::Read {
            line: line_no,
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.rows += 1;
        match parse_row(&line, whitelist) {
            Ok(Row::Keep(assertion)) => {
                if triples.insert(assertion) {
                    report.kept += 1;
                } else {
                    report.duplicates += 1;
                }
            }
            Ok(Row::NotWhitelisted) => report.filtered_relation += 1,
            Ok(Row::NotEnglish) => report.filtered_language += 1,
            Err(reason) => {
                tracing::warn!(line = line_no, %reason, "skipping malformed assertion row");
                report.malformed.push(RowDiagnostic {
                    line: line_no,
                    reason,
                });
            }
        }
    }
    if report.rows == 0 {
        return Err(ConceptNetError::EmptyDump);
    }
    if triples.is_empty() {
        return Err(ConceptNetError::NoAssertions);
    }
    for t in &triples {
        *report.per_relation.entry(t.relation.clone()).or_default() += 1;
    }
    Ok((AssertionIndex::from_assertions(triples), report))
}

fn parse_row(line: &str, whitelist: &RelationWhitelist) -> Result<Row, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(format!(
            "expected 5 tab-separated fields, found {}",
            fields.len()
        ));
    }
    let relation = fields[1]
        .strip_prefix("/r/")
        .filter(|r| !r.is_empty())
        .ok_or_else(|| format!("relation `{}` is not a /r/ URI", fields[1]))?;
    for endpoint in &fields[2..4] {
        if !endpoint.starts_with("/c/") {
            return Err(format!("endpoint `{endpoint}` is not a /c/ URI"));
        }
    }
    if !whitelist.contains(relation) {
        return Ok(Row::NotWhitelisted);
    }
    let (Some(start), Some(end)) = (english_term(fields[2]), english_term(fields[3])) else {
        return Ok(Row::NotEnglish);
    };
    let object = start.ok_or_else(|| format!("empty start node `{}`", fields[2]))?;
    let concept = end.ok_or_else(|| format!("empty end node `{}`", fields[3]))?;
    Ok(Row::Keep(Assertion {
        relation: relation.to_string(),
        object,
        concept,
    }))
}

/// `/c/en/ice_cream/n/...` -> `Some(Some("ice cream"))`; non-English nodes
/// give `None`; an English node with an empty term gives `Some(None)`.
fn english_term(uri: &str) -> Option<Option<String>> {
    let rest = uri.strip_prefix("/c/en/")?;
    let term = rest.split('/').next().unwrap_or("").replace('_', " ");
    let term = normalize_name(&term);
    Some((!term.is_empty()).then_some(term))
}
