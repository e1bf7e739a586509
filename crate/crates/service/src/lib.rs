//! HTTP service for the toxmarket exchange: a journaled state machine around
//! [`toxmarket_core::Exchange`] plus the axum routes that drive it.

pub mod clock;
pub mod config;
pub mod error;
pub mod http;
pub mod journal;
pub mod session;
pub mod state;
pub mod views;

use std::sync::Arc;
use std::time::Duration;

pub use clock::{Clock, ManualClock, SystemClock};
pub use config::{ServiceConfig, ServiceConfigError};
pub use error::ApiError;
pub use http::{router, AppState};
pub use journal::{Event, EventLog, FileJournal, JournalError, MemoryJournal, Record};
pub use state::{Observable, ServiceState};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ServiceConfigError),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("cannot read guidelines {path}: {source}")]
    Guidelines {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server error: {0}")]
    Server(std::io::Error),
}

/// Opens the journal, replays it, and builds the shared application state.
pub fn open_app(config: &ServiceConfig, clock: Arc<dyn Clock>) -> Result<AppState, ServeError> {
    config.validate()?;
    let (journal, records) = FileJournal::open(&config.journal_path, config.fsync)?;
    let state = ServiceState::replay(config.exchange.clone(), &records, Box::new(journal))?;
    tracing::info!(records = records.len(), path = %config.journal_path.display(), "journal replayed");
    let mut app = AppState::new(state, clock, &config.admin_token, config.session_ttl_secs);
    if let Some(path) = &config.guidelines_path {
        let text = std::fs::read_to_string(path).map_err(|source| ServeError::Guidelines {
            path: path.clone(),
            source,
        })?;
        app.guidelines = text.into();
    }
    Ok(app)
}

/// Runs the service until ctrl-c. A background task halts markets at their
/// cutoffs even when no requests arrive.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let app = open_app(&config, Arc::new(SystemClock))?;
    let addr = format!("{}:{}", config.bind, config.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| ServeError::Bind { addr: addr.clone(), source })?;
    tracing::info!(%addr, "listening");

    let ticker = app.clone();
    tokio::spawn(async move {
        let mut every = tokio::time::interval(Duration::from_secs(1));
        loop {
            every.tick().await;
            let now = ticker.clock.now();
            if let Err(e) = ticker.lock().tick(now) {
                tracing::error!(error = %e, "cutoff halt failed");
            }
        }
    });

    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServeError::Server)
}
