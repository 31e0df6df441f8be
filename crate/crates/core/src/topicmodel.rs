//! LDA topic model fitted by collapsed Gibbs sampling.
//!
//! Each token carries a topic assignment. A sweep visits every token in
//! document order, removes it from the count tables and draws a new topic
//! with weight
//!
//! ```text
//! p(k) ∝ (n_dk + alpha) * (n_kv + beta) / (n_k + V * beta)
//! ```
//!
//! After the last sweep the point estimates are read off the counts:
//! `phi[k][v] = (n_kv + beta) / (n_k + V * beta)` and
//! `theta[d][k] = (n_dk + alpha) / (n_d + K * alpha)`.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{tokenize, Corpus, TokenizerConfig};

pub const MODEL_SCHEMA: &str = "provthreads-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicId(pub usize);

impl TopicId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for TopicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopicModelError {
    #[error("corpus has no documents or no vocabulary")]
    EmptyCorpus,
    #[error("invalid LDA configuration: {0}")]
    InvalidConfig(String),
    #[error("document index {index} out of range (corpus has {len} documents)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unknown topic {0}")]
    UnknownTopic(TopicId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Defaults for `topics` topics: `alpha = 50 / K`, `beta = 0.01`,
    /// 1000 sweeps, seed 0.
    pub fn with_topics(topics: usize) -> Self {
        LdaConfig {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TopicModelError> {
        let bad = |msg: &str| Err(TopicModelError::InvalidConfig(msg.to_string()));
        if self.topics < 1 {
            return bad("topics must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1");
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig::with_topics(10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    config: LdaConfig,
    vocabulary: Vec<String>,
    phi: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    assignments: Vec<Vec<usize>>,
}

/// Count tables of the collapsed sampler.
struct Counts {
    doc_topic: Vec<Vec<u32>>,
    topic_term: Vec<Vec<u32>>,
    topic: Vec<u32>,
}

impl Counts {
    fn new(docs: usize, topics: usize, vocab: usize) -> Self {
        Counts {
            doc_topic: vec![vec![0; topics]; docs],
            topic_term: vec![vec![0; vocab]; topics],
            topic: vec![0; topics],
        }
    }

    fn add(&mut self, d: usize, k: usize, v: usize) {
        self.doc_topic[d][k] += 1;
        self.topic_term[k][v] += 1;
        self.topic[k] += 1;
    }

    fn remove(&mut self, d: usize, k: usize, v: usize) {
        self.doc_topic[d][k] -= 1;
        self.topic_term[k][v] -= 1;
        self.topic[k] -= 1;
    }
}

pub fn fit_lda(corpus: &Corpus, config: &LdaConfig) -> Result<TopicModel, TopicModelError> {
    config.validate()?;
    if corpus.is_empty() || corpus.vocabulary().is_empty() {
        return Err(TopicModelError::EmptyCorpus);
    }
    let k_count = config.topics;
    let v_count = corpus.vocabulary().len();
    let docs = corpus.doc_tokens();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counts = Counts::new(docs.len(), k_count, v_count);

    let mut assignments: Vec<Vec<usize>> = docs
        .iter()
        .enumerate()
        .map(|(d, tokens)| {
            tokens
                .iter()
                .map(|&v| {
                    let k = rng.random_range(0..k_count);
                    counts.add(d, k, v);
                    k
                })
                .collect()
        })
        .collect();

    let v_beta = v_count as f64 * config.beta;
    let mut weights = vec![0.0f64; k_count];
    for _ in 0..config.iterations {
        for (d, tokens) in docs.iter().enumerate() {
            for (i, &v) in tokens.iter().enumerate() {
                counts.remove(d, assignments[d][i], v);
                let mut total = 0.0;
                for (k, w) in weights.iter_mut().enumerate() {
                    *w = (counts.doc_topic[d][k] as f64 + config.alpha)
                        * (counts.topic_term[k][v] as f64 + config.beta)
                        / (counts.topic[k] as f64 + v_beta);
                    total += *w;
                }
                let k = sample_index(&weights, rng.random::<f64>() * total);
                assignments[d][i] = k;
                counts.add(d, k, v);
            }
        }
    }

    let phi = counts
        .topic_term
        .iter()
        .zip(&counts.topic)
        .map(|(row, &n_k)| {
            let denom = n_k as f64 + v_beta;
            row.iter().map(|&n| (n as f64 + config.beta) / denom).collect()
        })
        .collect();
    let k_alpha = k_count as f64 * config.alpha;
    let theta = counts
        .doc_topic
        .iter()
        .zip(docs)
        .map(|(row, tokens)| {
            let denom = tokens.len() as f64 + k_alpha;
            row.iter().map(|&n| (n as f64 + config.alpha) / denom).collect()
        })
        .collect();

    Ok(TopicModel {
        config: config.clone(),
        vocabulary: corpus.vocabulary().to_vec(),
        phi,
        theta,
        assignments,
    })
}

/// Inverse-CDF draw; `target` is uniform on `[0, sum(weights))`.
fn sample_index(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// First index of the maximum; earlier indices win ties.
fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if v <= values[b] => {}
            _ if v.is_nan() => {}
            _ => best = Some(i),
        }
    }
    best
}

impl TopicModel {
    /// Assembles a model from explicit distributions. `vocabulary` must be
    /// sorted and match the width of `phi`.
    pub fn from_parts(
        config: LdaConfig,
        vocabulary: Vec<String>,
        phi: Vec<Vec<f64>>,
        theta: Vec<Vec<f64>>,
    ) -> Result<Self, TopicModelError> {
        config.validate()?;
        let k = config.topics;
        let v = vocabulary.len();
        if phi.len() != k || phi.iter().any(|r| r.len() != v) {
            return Err(TopicModelError::InvalidConfig(format!("phi must be {k} x {v}")));
        }
        if theta.iter().any(|r| r.len() != k) {
            return Err(TopicModelError::InvalidConfig(format!(
                "theta rows must have {k} entries"
            )));
        }
        if vocabulary.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TopicModelError::InvalidConfig(
                "vocabulary must be sorted and unique".into(),
            ));
        }
        Ok(TopicModel {
            config,
            vocabulary,
            phi,
            theta,
            assignments: Vec::new(),
        })
    }

    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    pub fn topic_count(&self) -> usize {
        self.config.topics
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    /// Topic-term distribution, `K x V`.
    pub fn phi(&self) -> &[Vec<f64>] {
        &self.phi
    }

    /// Document-topic distribution, `D x K`.
    pub fn theta(&self) -> &[Vec<f64>] {
        &self.theta
    }

    /// Per-token topics from the final sweep.
    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    /// Tokens assigned to each topic in the final sweep.
    pub fn topic_token_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.config.topics];
        for &k in self.assignments.iter().flatten() {
            counts[k] += 1;
        }
        counts
    }

    pub fn contains_topic(&self, topic: TopicId) -> bool {
        topic.0 < self.config.topics
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn export(&self, corpus: &Corpus) -> ModelExport {
        let labels = corpus
            .documents()
            .iter()
            .enumerate()
            .take(self.theta.len())
            .map(|(d, doc)| DocLabel {
                doc_id: doc.doc_id.clone(),
                topic: doc_topic_label(self, d).expect("index within theta"),
            })
            .collect();
        ModelExport {
            schema: MODEL_SCHEMA.to_string(),
            config: self.config.clone(),
            vocabulary: self.vocabulary.clone(),
            phi: self.phi.clone(),
            theta: self.theta.clone(),
            labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocLabel {
    pub doc_id: String,
    pub topic: TopicId,
}

/// JSON form of a fitted model (`provthreads-model/1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub schema: String,
    pub config: LdaConfig,
    pub vocabulary: Vec<String>,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub labels: Vec<DocLabel>,
}

/// The document's most probable topic; ties go to the smallest topic id.
pub fn doc_topic_label(model: &TopicModel, doc_index: usize) -> Result<TopicId, TopicModelError> {
    let row = model.theta.get(doc_index).ok_or(TopicModelError::IndexOutOfRange {
        index: doc_index,
        len: model.theta.len(),
    })?;
    Ok(TopicId(argmax(row).unwrap_or(0)))
}

/// Top `n` terms of a topic by probability, ties in term order. Clamped to
/// the vocabulary size.
pub fn topic_terms(model: &TopicModel, topic: TopicId, n: usize) -> Result<Vec<(String, f64)>, TopicModelError> {
    let row = model.phi.get(topic.0).ok_or(TopicModelError::UnknownTopic(topic))?;
    let mut ranked: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
    // Vocabulary is sorted, so index order is term order.
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .take(n)
        .map(|(v, p)| (model.vocabulary[v].clone(), p))
        .collect())
}

/// The topic under which `term` is most probable, or `None` when the term is
/// outside the vocabulary.
pub fn keyword_topic(model: &TopicModel, term: &str) -> Option<TopicId> {
    let v = model.term_index(term)?;
    let column: Vec<f64> = model.phi.iter().map(|row| row[v]).collect();
    argmax(&column).map(TopicId)
}

/// Resolves a free-text query: each token votes for its keyword topic and
/// the most voted topic wins, smallest id on ties.
pub fn query_topic(model: &TopicModel, query: &str, config: &TokenizerConfig) -> Option<TopicId> {
    let mut votes = vec![0usize; model.topic_count()];
    for token in tokenize(query, config) {
        if let Some(k) = keyword_topic(model, &token) {
            votes[k.0] += 1;
        }
    }
    let best = votes.iter().copied().max()?;
    if best == 0 {
        return None;
    }
    votes.iter().position(|&c| c == best).map(TopicId)
}
