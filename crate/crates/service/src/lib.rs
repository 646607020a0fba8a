//! HTTP/JSON service and command-line front end for `sketchforge-core`.

pub mod api;
pub mod cli;
pub mod routes;
pub mod store;

use std::path::PathBuf;
use std::sync::Arc;

pub use routes::{router, AppState};
pub use store::CheckpointStore;

/// Serves the API on `host:port` until interrupted.
pub async fn serve(host: &str, port: u16, checkpoints: Option<PathBuf>) -> std::io::Result<()> {
    let state = AppState { checkpoints: Arc::new(CheckpointStore::new(checkpoints)) };
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
