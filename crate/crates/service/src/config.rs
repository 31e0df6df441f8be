//! Service configuration (TOML).
//!
//! ```toml
//! data_dir = "state"
//! listen = "127.0.0.1:8080"
//!
//! [[sessions]]
//! id = "analyst-01"
//! corpus = "corpus_small"
//! log = "session_main.jsonl"
//! topics = 2
//! seed = 42
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use provthreads_core::{LdaConfig, SegmentationParams};
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {reason}", path.display())]
    Unreadable { path: PathBuf, reason: String },
    #[error("invalid config {}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub id: String,
    pub corpus: PathBuf,
    pub log: PathBuf,
    #[serde(default = "default_topics")]
    pub topics: usize,
    #[serde(default)]
    pub seed: u64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
    pub tau_count: Option<usize>,
    pub tau_gap_ms: Option<u64>,
}

fn default_topics() -> usize {
    10
}

impl SessionConfig {
    pub fn lda(&self) -> LdaConfig {
        let mut lda = LdaConfig::with_topics(self.topics);
        lda.seed = self.seed;
        if let Some(a) = self.alpha {
            lda.alpha = a;
        }
        if let Some(b) = self.beta {
            lda.beta = b;
        }
        if let Some(i) = self.iterations {
            lda.iterations = i;
        }
        lda
    }

    pub fn params(&self) -> SegmentationParams {
        let d = SegmentationParams::default();
        SegmentationParams {
            tau_count: self.tau_count.unwrap_or(d.tau_count),
            tau_gap_ms: self.tau_gap_ms.unwrap_or(d.tau_gap_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    /// Where per-session merge/parameter state is persisted.
    pub data_dir: PathBuf,
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default)]
    pub sessions: Vec<SessionConfig>,
}

fn default_listen() -> String {
    DEFAULT_LISTEN.to_string()
}

impl ServiceConfig {
    pub fn parse(text: &str, base: &Path, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ServiceConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid {
            path: origin.to_path_buf(),
            message: describe_toml_error(text, &e),
        })?;
        cfg.data_dir = base.join(&cfg.data_dir);
        for s in &mut cfg.sessions {
            s.corpus = base.join(&s.corpus);
            s.log = base.join(&s.log);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, path)
    }
}

fn describe_toml_error(text: &str, err: &toml::de::Error) -> String {
    let message = err.message().trim().to_string();
    match err.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {message}")
        }
        None => message,
    }
}
