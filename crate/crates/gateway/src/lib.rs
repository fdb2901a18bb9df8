//! Chat-completions proxy that compiles prompt decorators in the latest
//! user message, answers introspection turns locally, and forwards
//! everything else upstream with the directive block injected.

pub mod audit;
pub mod config;
pub mod proxy;
pub mod sanitize;
pub mod store;

use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;

pub use audit::{AuditLog, AuditRecord};
pub use config::{ConfigError, GatewayConfig, InjectionPosition};
pub use proxy::{Gateway, APPLIED_HEADER, LOCAL_MODEL, SESSION_HEADER};
pub use sanitize::sanitize_untrusted;

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/v1/chat/completions", post(proxy::chat_completions))
        .route("/healthz", get(proxy::healthz))
        .route("/v1/sessions/{id}", get(proxy::session_export))
        .with_state(gateway)
}

/// Binds the configured address and serves until ctrl-c.
pub async fn serve(config: &GatewayConfig) -> Result<(), ServeError> {
    let gateway = Arc::new(Gateway::from_config(config)?);
    let addr = config.listen_addr()?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, upstream = %config.upstream_url, "gateway listening");
    axum::serve(listener, router(gateway))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
