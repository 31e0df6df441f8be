//! In-memory session registry with per-session snapshots.
//!
//! Readers clone an `Arc` to the current snapshot and never wait on a
//! writer. Writers for one session are serialized, build a complete new
//! snapshot, persist the sidecar, and only then publish it, so a failed
//! mutation leaves the session untouched.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use provthreads_core::{
    load_corpus, parse_event_log, Analysis, MergeError, MergeMap, PipelineError, SegmentationParams, TokenizerConfig,
    Views,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SessionConfig;

pub const SIDECAR_SCHEMA: &str = "provthreads-session-state/1";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error(transparent)]
    InvalidMerge(#[from] MergeError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("session {id}: {source}")]
    Load { id: String, source: PipelineError },
    #[error("cannot read {}: {reason}", path.display())]
    Io { path: PathBuf, reason: String },
}

/// Mutable per-session state, persisted next to the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub schema: String,
    pub merges: MergeMap,
    pub params: SegmentationParams,
}

#[derive(Debug)]
pub struct Snapshot {
    pub session_id: String,
    pub analysis: Arc<Analysis>,
    pub views: Views,
}

impl Snapshot {
    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            event_count: self.analysis.log.len(),
            labeled_count: self.views.labeled.labeled_count(),
            duration_ms: self.analysis.log.duration_ms,
            topics: self.analysis.model.topic_count(),
            surviving_topics: self
                .views
                .merges
                .surviving(self.analysis.model.topic_count())
                .into_iter()
                .map(|t| t.0)
                .collect(),
            segment_count: self.views.segmentation.len(),
            merges: self.views.merges.pairs().map(|(s, t)| (s.0, t.0)).collect(),
            params: self.views.params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub event_count: usize,
    pub labeled_count: usize,
    pub duration_ms: u64,
    pub topics: usize,
    pub surviving_topics: Vec<usize>,
    pub segment_count: usize,
    /// `(source, target)` pairs currently in effect.
    pub merges: Vec<(usize, usize)>,
    pub params: SegmentationParams,
}

struct SessionHandle {
    writer: Mutex<()>,
    current: RwLock<Arc<Snapshot>>,
}

impl SessionHandle {
    fn read(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock poisoned").clone()
    }
}

#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<BTreeMap<String, Arc<SessionHandle>>>,
    data_dir: Option<PathBuf>,
}

impl SessionStore {
    /// A store that persists session state under `data_dir`.
    pub fn new(data_dir: Option<PathBuf>) -> Self {
        SessionStore {
            sessions: RwLock::default(),
            data_dir,
        }
    }

    fn sidecar_path(&self, session_id: &str) -> Option<PathBuf> {
        self.data_dir
            .as_ref()
            .map(|d| d.join(format!("{session_id}.state.json")))
    }

    fn read_sidecar(&self, session_id: &str) -> Option<SessionState> {
        let path = self.sidecar_path(session_id)?;
        let text = fs::read_to_string(&path).ok()?;
        match serde_json::from_str(&text) {
            Ok(state) => Some(state),
            Err(e) => {
                tracing::warn!(path = %path.display(), error = %e, "ignoring unreadable session state");
                None
            }
        }
    }

    fn write_sidecar(&self, session_id: &str, state: &SessionState) -> Result<(), StoreError> {
        let Some(path) = self.sidecar_path(session_id) else {
            return Ok(());
        };
        let io = |e: std::io::Error| StoreError::Io {
            path: path.clone(),
            reason: e.to_string(),
        };
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("json.tmp");
        let body = serde_json::to_string_pretty(state).expect("state serializes");
        fs::write(&tmp, body).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }

    /// Fits the session's model and registers it, replacing any session with
    /// the same id. Persisted merge/parameter state is reapplied when it is
    /// still valid for the new model.
    pub fn load(&self, cfg: &SessionConfig) -> Result<SessionSummary, StoreError> {
        let wrap = |source: PipelineError| StoreError::Load {
            id: cfg.id.clone(),
            source,
        };
        let docs = load_corpus(&cfg.corpus).map_err(|e| wrap(e.into()))?;
        let bytes = fs::read(&cfg.log).map_err(|e| StoreError::Io {
            path: cfg.log.clone(),
            reason: e.to_string(),
        })?;
        let log = parse_event_log(&bytes[..], &cfg.id).map_err(|e| wrap(e.into()))?;
        let analysis = provthreads_core::analyze(docs, TokenizerConfig::default(), log, &cfg.lda()).map_err(wrap)?;
        self.insert(cfg.id.clone(), analysis, cfg.params())
    }

    pub fn insert(
        &self,
        session_id: String,
        analysis: Analysis,
        params: SegmentationParams,
    ) -> Result<SessionSummary, StoreError> {
        let analysis = Arc::new(analysis);
        let persisted = self.read_sidecar(&session_id);
        let views = persisted
            .and_then(|s| analysis.views(&s.merges, &s.params).ok())
            .map(Ok)
            .unwrap_or_else(|| analysis.views(&MergeMap::identity(), &params))
            .map_err(|e| StoreError::InvalidParams(e.to_string()))?;
        let snapshot = Arc::new(Snapshot {
            session_id: session_id.clone(),
            analysis,
            views,
        });
        let summary = snapshot.summary();
        let handle = Arc::new(SessionHandle {
            writer: Mutex::new(()),
            current: RwLock::new(snapshot),
        });
        self.sessions
            .write()
            .expect("registry lock poisoned")
            .insert(session_id, handle);
        Ok(summary)
    }

    fn handle(&self, session_id: &str) -> Result<Arc<SessionHandle>, StoreError> {
        self.sessions
            .read()
            .expect("registry lock poisoned")
            .get(session_id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(session_id.to_string()))
    }

    pub fn snapshot(&self, session_id: &str) -> Result<Arc<Snapshot>, StoreError> {
        Ok(self.handle(session_id)?.read())
    }

    pub fn summaries(&self) -> Vec<SessionSummary> {
        let handles: Vec<_> = self
            .sessions
            .read()
            .expect("registry lock poisoned")
            .values()
            .cloned()
            .collect();
        handles.iter().map(|h| h.read().summary()).collect()
    }

    fn mutate(
        &self,
        session_id: &str,
        next: impl FnOnce(&Snapshot) -> Result<Views, StoreError>,
    ) -> Result<SessionSummary, StoreError> {
        let handle = self.handle(session_id)?;
        let _guard = handle.writer.lock().expect("writer lock poisoned");
        let current = handle.read();
        let views = next(&current)?;
        self.write_sidecar(
            session_id,
            &SessionState {
                schema: SIDECAR_SCHEMA.to_string(),
                merges: views.merges.clone(),
                params: views.params,
            },
        )?;
        let snapshot = Arc::new(Snapshot {
            session_id: current.session_id.clone(),
            analysis: current.analysis.clone(),
            views,
        });
        let summary = snapshot.summary();
        *handle.current.write().expect("snapshot lock poisoned") = snapshot;
        Ok(summary)
    }

    /// Composes `delta` onto the session's merge map and recomputes views.
    pub fn merge(&self, session_id: &str, delta: &MergeMap) -> Result<SessionSummary, StoreError> {
        self.mutate(session_id, |snap| {
            let k = snap.analysis.model.topic_count();
            let merges = snap.views.merges.compose(delta, k)?;
            snap.analysis
                .views(&merges, &snap.views.params)
                .map_err(|e| StoreError::InvalidParams(e.to_string()))
        })
    }

    pub fn set_params(&self, session_id: &str, params: SegmentationParams) -> Result<SessionSummary, StoreError> {
        params.validate().map_err(StoreError::InvalidParams)?;
        self.mutate(session_id, |snap| {
            snap.analysis
                .views(&snap.views.merges, &params)
                .map_err(|e| StoreError::InvalidParams(e.to_string()))
        })
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }
}
