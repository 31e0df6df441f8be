//! User-directed topic merges.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topicmodel::{topic_terms, TopicId, TopicModel, TopicModelError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MergeError {
    #[error("topic {0} does not exist")]
    UnknownTopic(TopicId),
    #[error("merge target {target} is itself merged away")]
    TargetMergedAway { target: TopicId },
    #[error("topic {0} was already merged into another topic")]
    SourceAlreadyMerged(TopicId),
}

/// Relabeling from merged-away topics to the topics that absorb them.
/// Topics without an entry map to themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MergeMap(BTreeMap<TopicId, TopicId>);

impl MergeMap {
    pub fn identity() -> Self {
        MergeMap::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (TopicId, TopicId)>) -> Self {
        MergeMap(pairs.into_iter().collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|(s, t)| s == t)
    }

    pub fn resolve(&self, topic: TopicId) -> TopicId {
        self.0.get(&topic).copied().unwrap_or(topic)
    }

    pub fn is_surviving(&self, topic: TopicId) -> bool {
        self.resolve(topic) == topic
    }

    pub fn pairs(&self) -> impl Iterator<Item = (TopicId, TopicId)> + '_ {
        self.0.iter().map(|(s, t)| (*s, *t))
    }

    /// Topics folded into `survivor`, including itself, in id order.
    pub fn members(&self, survivor: TopicId, topic_count: usize) -> Vec<TopicId> {
        (0..topic_count)
            .map(TopicId)
            .filter(|&t| self.resolve(t) == survivor)
            .collect()
    }

    pub fn surviving(&self, topic_count: usize) -> BTreeSet<TopicId> {
        (0..topic_count)
            .map(TopicId)
            .filter(|&t| self.is_surviving(t))
            .collect()
    }

    /// A valid map is idempotent: no target is itself mapped elsewhere, and
    /// every id is below `topic_count`.
    pub fn validate(&self, topic_count: usize) -> Result<(), MergeError> {
        for (s, t) in self.pairs() {
            for id in [s, t] {
                if id.0 >= topic_count {
                    return Err(MergeError::UnknownTopic(id));
                }
            }
            if !self.is_surviving(t) {
                return Err(MergeError::TargetMergedAway { target: t });
            }
        }
        Ok(())
    }

    /// Applies `delta` on top of this map. Sources and targets in `delta`
    /// must be topics that currently survive.
    pub fn compose(&self, delta: &MergeMap, topic_count: usize) -> Result<MergeMap, MergeError> {
        self.validate(topic_count)?;
        delta.validate(topic_count)?;
        for (s, t) in delta.pairs() {
            if s == t {
                continue;
            }
            if !self.is_surviving(s) {
                return Err(MergeError::SourceAlreadyMerged(s));
            }
            if !self.is_surviving(t) {
                return Err(MergeError::TargetMergedAway { target: t });
            }
        }
        let mut out = BTreeMap::new();
        for (s, t) in self.pairs() {
            out.insert(s, delta.resolve(t));
        }
        for (s, t) in delta.pairs() {
            if s != t {
                out.insert(s, t);
            }
        }
        out.retain(|s, t| s != t);
        let composed = MergeMap(out);
        composed.validate(topic_count)?;
        Ok(composed)
    }
}

/// Term list for a surviving topic: the union of the top-`n` lists of every
/// topic merged into it, keeping each term's highest probability, re-ranked
/// and cut to `n`.
pub fn merged_topic_terms(
    model: &TopicModel,
    merges: &MergeMap,
    topic: TopicId,
    n: usize,
) -> Result<Vec<(String, f64)>, TopicModelError> {
    if !model.contains_topic(topic) || !merges.is_surviving(topic) {
        return Err(TopicModelError::UnknownTopic(topic));
    }
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for member in merges.members(topic, model.topic_count()) {
        for (term, p) in topic_terms(model, member, n)? {
            let slot = best.entry(term).or_insert(p);
            if p > *slot {
                *slot = p;
            }
        }
    }
    let mut ranked: Vec<(String, f64)> = best.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(n);
    Ok(ranked)
}
