//! HTTP service over analysed sessions.
//!
//! Sessions listed in the config are fitted once at startup. Merge and
//! segmentation-parameter changes are applied per session, persisted to
//! `data_dir`, and reapplied on the next start.

pub mod api;
pub mod config;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use thiserror::Error;
use tokio::net::TcpListener;

pub use api::{router, API_SCHEMA};
pub use config::{ConfigError, ServiceConfig, SessionConfig};
pub use store::{SessionState, SessionStore, SessionSummary, Snapshot, StoreError, SIDECAR_SCHEMA};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server error: {0}")]
    Server(std::io::Error),
}

/// Builds a store holding every configured session.
pub fn load_store(config: &ServiceConfig) -> Result<SessionStore, StoreError> {
    let store = SessionStore::new(Some(config.data_dir.clone()));
    for session in &config.sessions {
        let summary = store.load(session)?;
        tracing::info!(
            session = %summary.session_id,
            events = summary.event_count,
            segments = summary.segment_count,
            "session loaded"
        );
    }
    Ok(store)
}

/// Serves `store` on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: TcpListener,
    store: Arc<SessionStore>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(ServeError::Server)
}

/// Loads the configured sessions and serves them until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let store = Arc::new(load_store(&config)?);
    let listener = TcpListener::bind(&config.listen)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.listen.clone(),
            source,
        })?;
    let addr: Option<SocketAddr> = listener.local_addr().ok();
    tracing::info!(?addr, "listening");
    serve_on(listener, store, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
