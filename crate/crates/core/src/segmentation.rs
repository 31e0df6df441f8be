//! Coverage series and topic-group segmentation of a labeled session.
//!
//! Segmentation starts from maximal runs of consecutive same-topic labeled
//! events (an unlabeled event ends a run and joins nothing). Adjacent
//! elements are then merged until no rule applies, always taking the
//! leftmost adjacent pair where a rule fires:
//!
//! 1. *coalesce*: both elements have the same topic set;
//! 2. *burst merge*: both elements are short and the time between the end of
//!    the first and the start of the second is below `tau_gap_ms`. The merged
//!    element's topic set is the union.
//!
//! An element is short when every run it was built from has fewer than
//! `tau_count` events. A burst of brief alternations therefore keeps
//! absorbing short neighbours, while a long single-topic run never joins a
//! group.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::labeling::LabeledEventLog;
use crate::merge::{MergeError, MergeMap};
use crate::topicmodel::TopicId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub tau_count: usize,
    pub tau_gap_ms: u64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams {
            tau_count: 3,
            tau_gap_ms: 120_000,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.tau_count < 1 {
            return Err("tau_count must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveragePoint {
    /// Position of the event in the labeled log.
    pub event_index: usize,
    pub event_id: String,
    pub timestamp_ms: u64,
    pub height: usize,
}

/// Cumulative interaction count per topic over the whole session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageSeries {
    /// Indexed by topic id; one point per labeled event of that topic.
    pub per_topic: Vec<Vec<CoveragePoint>>,
}

impl CoverageSeries {
    pub fn final_height(&self, topic: TopicId) -> usize {
        self.per_topic
            .get(topic.0)
            .and_then(|pts| pts.last())
            .map_or(0, |p| p.height)
    }

    pub fn total_points(&self) -> usize {
        self.per_topic.iter().map(Vec::len).sum()
    }
}

pub fn coverage_series(log: &LabeledEventLog) -> CoverageSeries {
    let width = log
        .events
        .iter()
        .filter_map(|e| e.topic)
        .map(|t| t.0 + 1)
        .max()
        .unwrap_or(0)
        .max(log.topic_count);
    let mut per_topic: Vec<Vec<CoveragePoint>> = vec![Vec::new(); width];
    for (i, ev) in log.labeled() {
        let topic = ev.topic.expect("labeled");
        let points = &mut per_topic[topic.0];
        points.push(CoveragePoint {
            event_index: i,
            event_id: ev.event.event_id.clone(),
            timestamp_ms: ev.event.timestamp_ms,
            height: points.len() + 1,
        });
    }
    CoverageSeries { per_topic }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentEvent {
    pub event_index: usize,
    pub event_id: String,
    pub timestamp_ms: u64,
    pub topic: TopicId,
    /// Count of this topic's events within the segment up to and including
    /// this one.
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start_ms: u64,
    pub end_ms: u64,
    pub topic_group: BTreeSet<TopicId>,
    pub events: Vec<SegmentEvent>,
    /// Length of the longest single-topic run the segment was built from.
    pub longest_run: usize,
}

impl Segment {
    pub fn per_topic_counts(&self) -> BTreeMap<TopicId, usize> {
        let mut counts = BTreeMap::new();
        for ev in &self.events {
            *counts.entry(ev.topic).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub params: SegmentationParams,
    pub segments: Vec<Segment>,
}

impl Segmentation {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn export(&self) -> SegmentationExport {
        SegmentationExport {
            schema: SEGMENTATION_SCHEMA.to_string(),
            params: self.params,
            segments: self
                .segments
                .iter()
                .map(|s| SegmentRecord {
                    start_ms: s.start_ms,
                    end_ms: s.end_ms,
                    topics: s.topic_group.iter().map(|t| t.0).collect(),
                    event_ids: s.events.iter().map(|e| e.event_id.clone()).collect(),
                })
                .collect(),
        }
    }
}

pub const SEGMENTATION_SCHEMA: &str = "provthreads-segmentation/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub start_ms: u64,
    pub end_ms: u64,
    pub topics: Vec<usize>,
    pub event_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationExport {
    pub schema: String,
    pub params: SegmentationParams,
    pub segments: Vec<SegmentRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Element {
    pub(crate) topics: BTreeSet<TopicId>,
    /// Indices into the labeled log, in time order.
    pub(crate) events: Vec<usize>,
    pub(crate) start_ms: u64,
    pub(crate) end_ms: u64,
    pub(crate) longest_run: usize,
}

impl Element {
    fn absorb(&mut self, other: Element) {
        self.topics.extend(other.topics);
        self.events.extend(other.events);
        self.end_ms = other.end_ms;
        self.longest_run = self.longest_run.max(other.longest_run);
    }
}

fn initial_runs(log: &LabeledEventLog) -> Vec<Element> {
    let mut runs: Vec<Element> = Vec::new();
    let mut open = false;
    for (i, ev) in log.events.iter().enumerate() {
        let Some(topic) = ev.topic else {
            open = false;
            continue;
        };
        let ts = ev.event.timestamp_ms;
        match runs.last_mut() {
            Some(run) if open && run.topics.contains(&topic) => {
                run.events.push(i);
                run.end_ms = ts;
                run.longest_run += 1;
            }
            _ => runs.push(Element {
                topics: BTreeSet::from([topic]),
                events: vec![i],
                start_ms: ts,
                end_ms: ts,
                longest_run: 1,
            }),
        }
        open = true;
    }
    runs
}

fn mergeable(a: &Element, b: &Element, params: &SegmentationParams) -> bool {
    if a.topics == b.topics {
        return true;
    }
    let short = |e: &Element| e.longest_run < params.tau_count;
    short(a) && short(b) && b.start_ms.saturating_sub(a.end_ms) < params.tau_gap_ms
}

/// Merges adjacent elements, leftmost pair first, until nothing applies.
pub(crate) fn merge_to_fixpoint(mut elements: Vec<Element>, params: &SegmentationParams) -> Vec<Element> {
    let mut i = 0;
    while i + 1 < elements.len() {
        if mergeable(&elements[i], &elements[i + 1], params) {
            let next = elements.remove(i + 1);
            elements[i].absorb(next);
            // Only the pair ending at `i` can have become applicable.
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }
    elements
}

fn to_segment(element: Element, log: &LabeledEventLog) -> Segment {
    let mut heights: BTreeMap<TopicId, usize> = BTreeMap::new();
    let events = element
        .events
        .iter()
        .map(|&i| {
            let ev = &log.events[i];
            let topic = ev.topic.expect("segments hold labeled events");
            let h = heights.entry(topic).or_insert(0);
            *h += 1;
            SegmentEvent {
                event_index: i,
                event_id: ev.event.event_id.clone(),
                timestamp_ms: ev.event.timestamp_ms,
                topic,
                height: *h,
            }
        })
        .collect();
    Segment {
        start_ms: element.start_ms,
        end_ms: element.end_ms,
        topic_group: element.topics,
        events,
        longest_run: element.longest_run,
    }
}

pub fn segment(log: &LabeledEventLog, params: &SegmentationParams) -> Segmentation {
    let elements = merge_to_fixpoint(initial_runs(log), params);
    Segmentation {
        params: *params,
        segments: elements.into_iter().map(|e| to_segment(e, log)).collect(),
    }
}

/// Relabels the log through `merges` and segments the result.
pub fn resegment_with_merge(
    log: &LabeledEventLog,
    params: &SegmentationParams,
    merges: &MergeMap,
) -> Result<Segmentation, MergeError> {
    merges.validate(log.topic_count)?;
    let relabeled = log.relabel(|t| merges.resolve(t));
    Ok(segment(&relabeled, params))
}
