//! Live election-night service: sessions, declarations, forecasts and
//! background re-optimization over HTTP/JSON.

pub mod api;
pub mod error;
pub mod session;
pub mod state;
pub mod store;

use std::net::SocketAddr;

pub use api::router;
pub use state::AppState;

use crate::cli::ServeArgs;
use crate::error::{Error, Result};

/// Binds, replays the event logs and serves until interrupted.
pub fn serve_blocking(args: &ServeArgs, threads: usize) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::Runtime(format!("runtime: {e}")))?;
    rt.block_on(async {
        let state = AppState::open(args.data_dir.clone(), threads)?;
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| Error::Runtime(format!("bind {}:{}: {e}", args.host, args.port)))?;
        let addr: SocketAddr = listener
            .local_addr()
            .map_err(|e| Error::Runtime(e.to_string()))?;
        eprintln!(
            "listening on {addr} ({} sessions replayed)",
            state.session_ids().len()
        );
        axum::serve(listener, router(state))
            .with_graceful_shutdown(shutdown_signal())
            .await
            .map_err(|e| Error::Runtime(e.to_string()))
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
