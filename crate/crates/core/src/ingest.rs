//! Interaction-log ingestion.
//!
//! Logs are JSON Lines: one event object per line with the required fields
//! `event_id`, `timestamp` (milliseconds since session start) and `action`,
//! plus optional `doc_id` and `payload`. Any other field is ignored by the
//! pipeline but survives verbatim in [`InteractionEvent::raw`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: negative timestamp")]
    NegativeTimestamp { line: usize },
    #[error("line {line}: duplicate event id {event_id:?}")]
    DuplicateEventId { line: usize, event_id: String },
    #[error("read failed: {0}")]
    Io(String),
}

/// What the analyst did. Unrecognized action strings become [`Action::Other`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    OpenDocument,
    CloseDocument,
    MoveDocument,
    LinkDocuments,
    Search,
    Highlight,
    Note,
    Other,
}

impl Action {
    pub const ALL: [Action; 8] = [
        Action::OpenDocument,
        Action::CloseDocument,
        Action::MoveDocument,
        Action::LinkDocuments,
        Action::Search,
        Action::Highlight,
        Action::Note,
        Action::Other,
    ];

    /// Total: anything not in the canonical vocabulary maps to `Other`.
    pub fn parse(s: &str) -> Action {
        match s {
            "open_document" => Action::OpenDocument,
            "close_document" => Action::CloseDocument,
            "move_document" => Action::MoveDocument,
            "link_documents" => Action::LinkDocuments,
            "search" => Action::Search,
            "highlight" => Action::Highlight,
            "note" => Action::Note,
            _ => Action::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::OpenDocument => "open_document",
            Action::CloseDocument => "close_document",
            Action::MoveDocument => "move_document",
            Action::LinkDocuments => "link_documents",
            Action::Search => "search",
            Action::Highlight => "highlight",
            Action::Note => "note",
            Action::Other => "other",
        }
    }

    fn requires_doc(self) -> bool {
        matches!(
            self,
            Action::OpenDocument | Action::CloseDocument | Action::MoveDocument | Action::Highlight
        )
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub event_id: String,
    pub timestamp_ms: u64,
    pub action: Action,
    pub doc_id: Option<String>,
    pub payload: Option<String>,
    /// The source record exactly as it appeared in the log (without the line
    /// terminator). Empty for events built in code.
    pub raw: String,
}

impl InteractionEvent {
    pub fn new(event_id: impl Into<String>, timestamp_ms: u64, action: Action) -> Self {
        InteractionEvent {
            event_id: event_id.into(),
            timestamp_ms,
            action,
            doc_id: None,
            payload: None,
            raw: String::new(),
        }
    }

    pub fn with_doc(mut self, doc_id: impl Into<String>) -> Self {
        self.doc_id = Some(doc_id.into());
        self
    }

    pub fn with_payload(mut self, payload: impl Into<String>) -> Self {
        self.payload = Some(payload.into());
        self
    }

    /// Both endpoints of a `link_documents` event, read from `"docA,docB"`.
    pub fn linked_doc_ids(&self) -> Vec<&str> {
        if self.action != Action::LinkDocuments {
            return Vec::new();
        }
        self.payload.as_deref().map(split_link_payload).unwrap_or_default()
    }

    /// The record as a JSON object: the raw source record when there is one,
    /// otherwise the canonical fields.
    pub fn record(&self) -> Map<String, Value> {
        if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(&self.raw) {
            return map;
        }
        let mut map = Map::new();
        map.insert("event_id".into(), Value::from(self.event_id.clone()));
        map.insert("timestamp".into(), Value::from(self.timestamp_ms));
        map.insert("action".into(), Value::from(self.action.as_str()));
        if let Some(doc) = &self.doc_id {
            map.insert("doc_id".into(), Value::from(doc.clone()));
        }
        if let Some(payload) = &self.payload {
            map.insert("payload".into(), Value::from(payload.clone()));
        }
        map
    }

    fn to_line(&self) -> String {
        if self.raw.is_empty() {
            Value::Object(self.record()).to_string()
        } else {
            self.raw.clone()
        }
    }
}

fn split_link_payload(payload: &str) -> Vec<&str> {
    payload.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub session_id: String,
    pub events: Vec<InteractionEvent>,
    pub duration_ms: u64,
}

impl EventLog {
    /// Builds a log from events in file order, applying the stable timestamp
    /// sort and computing the duration.
    pub fn from_events(session_id: impl Into<String>, mut events: Vec<InteractionEvent>) -> Self {
        events.sort_by_key(|e| e.timestamp_ms);
        let duration_ms = events.iter().map(|e| e.timestamp_ms).max().unwrap_or(0);
        EventLog {
            session_id: session_id.into(),
            events,
            duration_ms,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for event in &self.events {
            writeln!(out, "{}", event.to_line())?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("records are UTF-8")
    }
}

/// Parses a JSONL interaction log. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_event_log<R: BufRead>(input: R, session_id: &str) -> Result<EventLog, IngestError> {
    let mut events = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in input.split(b'\n').enumerate() {
        let line_no = idx + 1;
        let bytes = line.map_err(|e| IngestError::Io(e.to_string()))?;
        let text = String::from_utf8(bytes).map_err(|_| IngestError::MalformedRecord {
            line: line_no,
            reason: "not valid UTF-8".into(),
        })?;
        let text = text.strip_suffix('\r').unwrap_or(&text);
        if text.trim().is_empty() {
            continue;
        }
        let event = parse_record(text, line_no)?;
        if !seen.insert(event.event_id.clone()) {
            return Err(IngestError::DuplicateEventId {
                line: line_no,
                event_id: event.event_id,
            });
        }
        events.push(event);
    }
    Ok(EventLog::from_events(session_id, events))
}

pub fn parse_event_log_str(input: &str, session_id: &str) -> Result<EventLog, IngestError> {
    parse_event_log(input.as_bytes(), session_id)
}

fn parse_record(text: &str, line: usize) -> Result<InteractionEvent, IngestError> {
    let malformed = |reason: &str| IngestError::MalformedRecord {
        line,
        reason: reason.to_string(),
    };
    let value: Value = serde_json::from_str(text).map_err(|e| malformed(&e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("record is not a JSON object"))?;

    let event_id = match obj.get("event_id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => return Err(malformed("event_id must be a non-empty string")),
        None => return Err(malformed("missing event_id")),
    };
    let timestamp = match obj.get("timestamp") {
        Some(Value::Number(n)) => {
            if let Some(v) = n.as_u64() {
                v
            } else if n.as_i64().is_some() {
                return Err(IngestError::NegativeTimestamp { line });
            } else {
                return Err(malformed("timestamp must be an integer"));
            }
        }
        Some(_) => return Err(malformed("timestamp must be an integer")),
        None => return Err(malformed("missing timestamp")),
    };
    let action = match obj.get("action") {
        Some(Value::String(s)) => Action::parse(s),
        Some(_) => return Err(malformed("action must be a string")),
        None => return Err(malformed("missing action")),
    };
    let doc_id = optional_string(obj, "doc_id").map_err(|r| malformed(&r))?;
    let payload = optional_string(obj, "payload").map_err(|r| malformed(&r))?;

    let mut event = InteractionEvent {
        event_id,
        timestamp_ms: timestamp,
        action,
        doc_id,
        payload,
        raw: text.to_string(),
    };
    if event.action == Action::LinkDocuments && event.doc_id.is_none() {
        event.doc_id = event.linked_doc_ids().first().map(|s| s.to_string());
    }
    if event.action == Action::Search && event.payload.is_none() {
        return Err(malformed("search event requires a non-empty payload"));
    }
    if event.action.requires_doc() && event.doc_id.is_none() {
        return Err(malformed(&format!(
            "{} event requires a non-empty doc_id",
            event.action
        )));
    }
    Ok(event)
}

/// Absent, `null` and `""` all read as `None`.
fn optional_string(obj: &Map<String, Value>, key: &str) -> Result<Option<String>, String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) if s.trim().is_empty() => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(format!("{key} must be a string")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DanglingRef {
    pub event_id: String,
    pub doc_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub session_id: String,
    pub event_count: usize,
    /// Events pointing at documents the corpus does not contain.
    pub dangling_refs: Vec<DanglingRef>,
    pub action_counts: BTreeMap<Action, usize>,
    pub first_ms: Option<u64>,
    pub last_ms: Option<u64>,
}

impl ValidationReport {
    pub fn span_ms(&self) -> u64 {
        match (self.first_ms, self.last_ms) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }
}

pub fn validate_log(log: &EventLog, corpus_doc_ids: &BTreeSet<String>) -> ValidationReport {
    let mut action_counts = BTreeMap::new();
    let mut dangling_refs = Vec::new();
    for event in &log.events {
        *action_counts.entry(event.action).or_insert(0) += 1;
        if let Some(doc) = &event.doc_id {
            if !corpus_doc_ids.contains(doc) {
                dangling_refs.push(DanglingRef {
                    event_id: event.event_id.clone(),
                    doc_id: doc.clone(),
                });
            }
        }
    }
    ValidationReport {
        session_id: log.session_id.clone(),
        event_count: log.events.len(),
        dangling_refs,
        action_counts,
        first_ms: log.events.first().map(|e| e.timestamp_ms),
        last_ms: log.events.last().map(|e| e.timestamp_ms),
    }
}
