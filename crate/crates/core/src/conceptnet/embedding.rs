//! Embedding providers and concept matching.

use std::collections::HashMap;
use std::io::BufRead;
use std::sync::RwLock;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AssertionIndex;
use crate::io::sha256_hex;
use crate::model::normalize_name;

pub const DEFAULT_DIMENSION: usize = 384;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("no embedding for `{0}`")]
    UnknownText(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("embedding table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("embedding endpoint: {0}")]
    Transport(String),
    #[error("embedding endpoint returned an unexpected payload: {0}")]
    Protocol(String),
}

/// A fixed-dimension vector with its Euclidean norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        EmbeddingVector { values, norm }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if u.dimension() != v.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            left: u.dimension(),
            right: v.dimension(),
        });
    }
    if u.norm == 0.0 || v.norm == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    let dot: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok((dot / (u.norm * v.norm)).clamp(-1.0, 1.0))
}

pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Precomputed vectors from a TSV file: `label \t v1,v2,...`.
/// Lookups normalize the text the same way labels are normalized.
#[derive(Debug, Clone, Default)]
pub struct TableEmbedder {
    vectors: HashMap<String, EmbeddingVector>,
    dimension: Option<usize>,
}

impl TableEmbedder {
    pub fn from_tsv(reader: impl BufRead) -> Result<Self, EmbeddingError> {
        let mut table = TableEmbedder::default();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let table_err = |message: String| EmbeddingError::Table {
                line: line_no,
                message,
            };
            let line = line.map_err(|e| table_err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (label, values) = line
                .split_once('\t')
                .ok_or_else(|| table_err("expected `label<TAB>values`".into()))?;
            let values = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| table_err(e.to_string()))?;
            table
                .insert(label, values)
                .map_err(|e| table_err(e.to_string()))?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, label: &str, values: Vec<f64>) -> Result<(), EmbeddingError> {
        if let Some(dim) = self.dimension {
            if dim != values.len() {
                return Err(EmbeddingError::DimensionMismatch {
                    left: dim,
                    right: values.len(),
                });
            }
        }
        self.dimension = Some(values.len());
        self.vectors
            .insert(normalize_name(label), EmbeddingVector::new(values));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl Embedder for TableEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        self.vectors
            .get(&normalize_name(text))
            .cloned()
            .ok_or_else(|| EmbeddingError::UnknownText(text.to_string()))
    }
}

const STOPWORDS: &[&str] = &[
    "a",
    "an",
    "and",
    "are",
    "as",
    "at",
    "be",
    "by",
    "can",
    "do",
    "does",
    "for",
    "from",
    "has",
    "have",
    "in",
    "is",
    "it",
    "its",
    "it's",
    "of",
    "on",
    "or",
    "that",
    "the",
    "this",
    "to",
    "was",
    "with",
    "yes",
    "no",
    "not",
    "you",
    "be",
    "usually",
    "often",
    "typically",
    "mostly",
];

/// Offline bag-of-words embedder: signed feature hashing of content words.
///
/// Texts sharing no content word are orthogonal; a text and its only content
/// word have cosine 1. Adequate for fixtures and mock runs, not a semantic model.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        HashingEmbedder { dimension }
    }

    pub fn tokens(text: &str) -> Vec<String> {
        text.to_lowercase()
            .split(|c: char| !(c.is_alphanumeric() || c == '\''))
            .map(|t| t.trim_matches('\''))
            .filter(|t| !t.is_empty() && !STOPWORDS.contains(t))
            .map(String::from)
            .collect()
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(DEFAULT_DIMENSION)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Embedder for HashingEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let mut values = vec![0.0; self.dimension];
        for token in Self::tokens(text) {
            let h = fnv1a(token.as_bytes());
            let slot = (h % self.dimension as u64) as usize;
            values[slot] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        Ok(EmbeddingVector::new(values))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Remote provider: `POST {texts: [...]}` returning `{vectors: [[...]]}`.
pub struct HttpEmbedder {
    url: String,
    model: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(
        url: impl Into<String>,
        model: Option<String>,
        timeout: Duration,
    ) -> Result<Self, EmbeddingError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbeddingError::Transport(e.to_string()))?;
        Ok(HttpEmbedder {
            url: url.into(),
            model,
            client,
        })
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let mut out = self.embed_batch(&[text])?;
        out.pop()
            .ok_or_else(|| EmbeddingError::Protocol("empty vector list".into()))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let body = EmbedRequest {
            model: self.model.as_deref(),
            texts,
        };
        let response = self
            .client
            .post(&self.url)
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| EmbeddingError::Transport(e.to_string()))?;
        let parsed: EmbedResponse = response
            .json()
            .map_err(|e| EmbeddingError::Protocol(e.to_string()))?;
        if parsed.vectors.len() != texts.len() {
            return Err(EmbeddingError::Protocol(format!(
                "sent {} texts, received {} vectors",
                texts.len(),
                parsed.vectors.len()
            )));
        }
        Ok(parsed
            .vectors
            .into_iter()
            .map(EmbeddingVector::new)
            .collect())
    }
}

/// Memoizes another embedder, keyed by the SHA-256 of the text.
pub struct CachedEmbedder<E> {
    inner: E,
    cache: RwLock<HashMap<String, EmbeddingVector>>,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E) -> Self {
        CachedEmbedder {
            inner,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.read().unwrap_or_else(|e| e.into_inner()).len()
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let key = sha256_hex(text.as_bytes());
        if let Some(v) = self
            .cache
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(&key)
        {
            return Ok(v.clone());
        }
        let v = self.inner.embed(text)?;
        self.cache
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, v.clone());
        Ok(v)
    }
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        (**self).embed(text)
    }
}

impl<T: Embedder + ?Sized> Embedder for Box<T> {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        (**self).embed(text)
    }
}

impl<T: Embedder + ?Sized> Embedder for std::sync::Arc<T> {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        (**self).embed(text)
    }
}

/// Concept-label embeddings, computed once per index.
pub struct ConceptMatcher {
    labels: Vec<String>,
    vectors: Vec<Option<EmbeddingVector>>,
}

impl ConceptMatcher {
    /// Labels the embedder cannot handle, or that embed to a zero vector,
    /// never match.
    pub fn build(index: &AssertionIndex, embedder: &(impl Embedder + ?Sized)) -> Self {
        let labels = index.concept_labels().to_vec();
        let vectors = labels
            .par_iter()
            .map(|label| embedder.embed(label).ok().filter(|v| v.norm() > 0.0))
            .collect();
        ConceptMatcher { labels, vectors }
    }

    pub fn unembedded(&self) -> usize {
        self.vectors.iter().filter(|v| v.is_none()).count()
    }

    /// Labels with cosine similarity at least `tau`, in index order.
    pub fn similar(&self, answer: &EmbeddingVector, tau: f64) -> Vec<&str> {
        let hits: Vec<bool> = self
            .vectors
            .par_iter()
            .map(|v| {
                v.as_ref()
                    .and_then(|v| cosine(answer, v).ok())
                    .is_some_and(|s| s >= tau)
            })
            .collect();
        self.labels
            .iter()
            .zip(hits)
            .filter(|(_, hit)| *hit)
            .map(|(l, _)| l.as_str())
            .collect()
    }
}
