//! DICOMweb prediction gateway: accepts STOW-RS uploads, gates and
//! classifies each image, stores a Structured Report, and serves results
//! over WADO-RS and a small JSON queue API.

pub mod config;
pub mod http;
pub mod multipart;
pub mod service;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use cxr_core::dicom::uid::{RandomUids, SystemClock};
use cxr_core::inference::load_model;
use cxr_core::pipeline::{Pipeline, PipelineError};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

pub use config::{ConfigSources, GatewayConfig};
pub use http::{router, AppState};
pub use service::{Gateway, StowResponse};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("loading model {path}: {detail}")]
    Model { path: String, detail: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Store(#[from] store::StoreError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn read_model(path: &std::path::Path) -> Result<cxr_core::inference::ModelFile, ServeError> {
    let err = |detail: String| ServeError::Model { path: path.display().to_string(), detail };
    let bytes = std::fs::read(path).map_err(|e| err(e.to_string()))?;
    load_model(&bytes).map_err(|e| err(e.to_string()))
}

/// Loads and validates models and opens the store.
pub fn build_gateway(config: &GatewayConfig) -> Result<Gateway, ServeError> {
    let pipeline = Pipeline::new(
        read_model(&config.classifier_model)?,
        read_model(&config.ood_model)?,
        config.ood_threshold,
    )?;
    let store = store::Store::open(&config.storage_dir)?;
    Ok(Gateway::new(pipeline, store, Arc::new(RandomUids), Arc::new(SystemClock)))
}

pub fn app(gateway: Gateway, config: &GatewayConfig) -> axum::Router {
    let state = AppState {
        gateway: Arc::new(gateway),
        in_flight: Arc::new(Semaphore::new(config.max_in_flight)),
        auth_token: config.auth_token.as_deref().map(Arc::from),
    };
    router(state, config.max_request_bytes)
}

/// Serves `app` on `listener` until `shutdown` resolves.
pub async fn serve_on(
    listener: TcpListener,
    app: axum::Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Runs the gateway until Ctrl-C.
pub async fn serve(config: GatewayConfig) -> Result<(), ServeError> {
    let gateway = build_gateway(&config)?;
    let listener = TcpListener::bind(config.listen).await?;
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!(%addr, store = %config.storage_dir.display(), "gateway listening");
    let app = app(gateway, &config);
    serve_on(listener, app, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
