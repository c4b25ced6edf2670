//! HTTP backend for running the adaptive 3-interval task with a human
//! listener. Payloads are documented in `API.md` next to this crate's
//! manifest.

mod api;
mod error;
mod session;

pub use api::{router, AppState, ServiceConfig, SessionView, StartRequest, TrialDescriptor, DEFAULT_ISI_MS};
pub use error::ServiceError;
pub use session::{Feedback, Session, SessionStore, Status};

use std::net::SocketAddr;
use std::sync::Arc;

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
