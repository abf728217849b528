//! HTTP gate service: session endpoints, a token-protected demo resource,
//! configuration and durable JSON-lines persistence.

pub mod api;
pub mod config;
pub mod persist;

use std::future::Future;
use std::sync::atomic::AtomicU64;
use std::sync::Arc;
use std::time::Duration;

use axum::http::{header, HeaderValue, Method};
use axum::Router;
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};
use xnogate_core::{Clock, Gate, NodeReader};

pub use api::{session_view, AppState};
pub use config::{load_config, load_config_with, ConfigError, GateConfig};
pub use persist::{recover_from_log, RecoveryError, RecoveryReport};

/// How often open sessions past their deadline are swept to `expired`.
pub const SWEEP_INTERVAL: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("recovery failed: {0}")]
    Recovery(#[from] RecoveryError),
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
}

pub struct GateService {
    state: Arc<AppState>,
    cors: Option<CorsLayer>,
    report: RecoveryReport,
}

impl GateService {
    /// Replays the logs in `config.data_dir` and builds the gate on top of them.
    pub fn open(
        config: &GateConfig,
        node: Arc<dyn NodeReader>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, StartupError> {
        let cors = if config.cors_origins.is_empty() {
            None
        } else {
            let origins = config
                .cors_origins
                .iter()
                .map(|o| HeaderValue::from_str(o).map_err(|_| StartupError::CorsOrigin(o.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            Some(
                CorsLayer::new()
                    .allow_origin(AllowOrigin::list(origins))
                    .allow_methods([Method::GET, Method::POST])
                    .allow_headers([header::CONTENT_TYPE, header::AUTHORIZATION]),
            )
        };

        let recovered = recover_from_log(&config.data_dir)?;
        if recovered.report.torn_lines_dropped > 0 {
            tracing::warn!(
                count = recovered.report.torn_lines_dropped,
                "dropped torn log tail"
            );
        }
        let gate = Gate::new(
            config.settings(),
            node.clone(),
            Arc::new(recovered.store),
            Arc::new(recovered.journal),
        );
        gate.restore(recovered.sessions);
        let state = Arc::new(AppState {
            gate: Arc::new(gate),
            node,
            clock,
            requests: AtomicU64::new(0),
        });
        Ok(GateService {
            state,
            cors,
            report: recovered.report,
        })
    }

    pub fn gate(&self) -> &Arc<Gate> {
        &self.state.gate
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    pub fn recovery(&self) -> &RecoveryReport {
        &self.report
    }

    pub fn router(&self) -> Router {
        let router = api::router(self.state.clone());
        match &self.cors {
            Some(cors) => router.layer(cors.clone()),
            None => router,
        }
    }

    /// Serves until `shutdown` resolves, sweeping expired sessions in the background.
    pub async fn serve(
        self,
        listener: TcpListener,
        shutdown: impl Future<Output = ()> + Send + 'static,
    ) -> std::io::Result<()> {
        let state = self.state.clone();
        let sweeper = tokio::spawn(async move {
            let mut tick = tokio::time::interval(SWEEP_INTERVAL);
            loop {
                tick.tick().await;
                if let Err(e) = state.gate.expire_sessions(state.clock.now_unix()).await {
                    tracing::error!(error = %e, "expiry sweep failed");
                }
            }
        });
        let result = axum::serve(listener, self.router())
            .with_graceful_shutdown(shutdown)
            .await;
        sweeper.abort();
        result
    }
}
