//! HTTP service for graph-based open-ended surveys.
//!
//! State lives in an append-only event log (see [`store`]); the HTTP layer in
//! [`api`] validates requests, commits events and serves analytics computed
//! from the stored cluster runs. Sessions and job statuses are in memory
//! only.

pub mod api;
pub mod config;
pub mod error;
pub mod events;
pub mod store;

pub use api::{router, AppState};
pub use config::ServiceConfig;

/// Binds `config.addr()` and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::open(config.clone()).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(config.addr()).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
