//! Topic labels for interaction events.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::Corpus;
use crate::ingest::{Action, EventLog, InteractionEvent};
use crate::topicmodel::{doc_topic_label, query_topic, TopicId, TopicModel};

/// How an event got its topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelReason {
    /// The event references a corpus document; the document's label is used.
    DocumentLabel,
    /// A document-less search resolved through its query terms.
    KeywordLabel,
    /// Inherited from the nearest preceding labeled event.
    CarriedOver,
    Unlabeled,
}

impl LabelReason {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelReason::DocumentLabel => "document_label",
            LabelReason::KeywordLabel => "keyword_label",
            LabelReason::CarriedOver => "carried_over",
            LabelReason::Unlabeled => "unlabeled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEvent {
    pub event: InteractionEvent,
    pub topic: Option<TopicId>,
    pub reason: LabelReason,
}

impl LabeledEvent {
    pub fn is_labeled(&self) -> bool {
        self.topic.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEventLog {
    pub session_id: String,
    pub events: Vec<LabeledEvent>,
    pub topic_count: usize,
    pub duration_ms: u64,
}

impl LabeledEventLog {
    pub fn labeled(&self) -> impl Iterator<Item = (usize, &LabeledEvent)> {
        self.events.iter().enumerate().filter(|(_, e)| e.is_labeled())
    }

    pub fn labeled_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_labeled()).count()
    }

    pub fn find(&self, event_id: &str) -> Option<&LabeledEvent> {
        self.events.iter().find(|e| e.event.event_id == event_id)
    }

    /// Rewrites every topic through `map`; reasons are untouched.
    pub fn relabel(&self, map: impl Fn(TopicId) -> TopicId) -> LabeledEventLog {
        let mut out = self.clone();
        for ev in &mut out.events {
            ev.topic = ev.topic.map(&map);
        }
        out
    }

    /// JSONL export: each source record plus `topic` and `reason`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            let mut record = ev.event.record();
            record.insert("topic".into(), ev.topic.map_or(Value::Null, |t| Value::from(t.0)));
            record.insert("reason".into(), Value::from(ev.reason.as_str()));
            out.push_str(&Value::Object(record).to_string());
            out.push('\n');
        }
        out
    }
}

/// Labels every event of `log`. Events are never dropped: anything that
/// cannot be resolved is kept as [`LabelReason::Unlabeled`].
///
/// - an event whose `doc_id` is in the corpus takes that document's label;
/// - an event whose `doc_id` is not in the corpus is unlabeled;
/// - a document-less search resolves through its query terms;
/// - any other document-less event (and a search with no known term)
///   carries over the topic of the nearest preceding labeled event.
pub fn label_events(log: &EventLog, model: &TopicModel, corpus: &Corpus) -> LabeledEventLog {
    let mut last_topic: Option<TopicId> = None;
    let mut events = Vec::with_capacity(log.events.len());
    for event in &log.events {
        let (topic, reason) = match &event.doc_id {
            Some(doc) => match corpus.doc_index(doc) {
                Some(d) => match doc_topic_label(model, d) {
                    Ok(t) => (Some(t), LabelReason::DocumentLabel),
                    Err(_) => (None, LabelReason::Unlabeled),
                },
                None => (None, LabelReason::Unlabeled),
            },
            None => {
                let keyword = match (event.action, &event.payload) {
                    (Action::Search, Some(q)) => query_topic(model, q, corpus.config()),
                    _ => None,
                };
                match (keyword, last_topic) {
                    (Some(t), _) => (Some(t), LabelReason::KeywordLabel),
                    (None, Some(t)) => (Some(t), LabelReason::CarriedOver),
                    (None, None) => (None, LabelReason::Unlabeled),
                }
            }
        };
        if topic.is_some() {
            last_topic = topic;
        }
        events.push(LabeledEvent {
            event: event.clone(),
            topic,
            reason,
        });
    }
    LabeledEventLog {
        session_id: log.session_id.clone(),
        events,
        topic_count: model.topic_count(),
        duration_ms: log.duration_ms,
    }
}
