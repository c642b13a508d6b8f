//! HTTP service for the story engine: catalog, online story library, PDF
//! export and the installable app shell.
//!
//! The service speaks plain HTTP. Browsers only run service workers on
//! secure origins (and on localhost), so public deployments are expected to
//! sit behind a TLS-terminating proxy.

mod api;
pub mod error;
mod shell;

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::routing::get;
use axum::{Json, Router};
use cuento_core::clock::{Clock, IdSource, RandomIds, SystemClock};
use cuento_core::gateway::content_tag;
use cuento_core::pdf::PdfLayout;
use cuento_core::store::StoreError;
use cuento_core::{load_catalog, open_store, Catalog, StoreHandle};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;
use tower_http::cors::CorsLayer;

pub use error::{ApiError, ErrorCode};
pub use shell::content_type;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub host: IpAddr,
    /// 0 binds an ephemeral port.
    pub port: u16,
    pub data_dir: PathBuf,
    /// Frontend build directory; the embedded shell is used when unset.
    pub static_dir: Option<PathBuf>,
    /// Catalog file; the shipped catalog is used when unset.
    pub catalog_path: Option<PathBuf>,
    pub require_ending: bool,
    pub allow_cross_origin: bool,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            data_dir: data_dir.into(),
            static_dir: None,
            catalog_path: None,
            require_ending: false,
            allow_cross_origin: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
}

pub struct AppState {
    pub(crate) catalog: Arc<Catalog>,
    pub(crate) catalog_body: Bytes,
    pub(crate) catalog_etag: String,
    pub(crate) store: Arc<StoreHandle>,
    pub(crate) static_dir: Option<PathBuf>,
    pub(crate) require_ending: bool,
    pub(crate) layout: PdfLayout,
    pub(crate) clock: Arc<dyn Clock>,
    pub(crate) ids: Arc<dyn IdSource>,
    allow_cross_origin: bool,
}

impl AppState {
    /// Loads the catalog and opens the story store; binds nothing.
    pub fn from_config(config: &ServiceConfig) -> Result<AppState, ServeError> {
        let raw = match &config.catalog_path {
            Some(path) => std::fs::read(path)
                .map_err(|e| ServeError::Config(format!("cannot read catalog {}: {e}", path.display())))?,
            None => Catalog::builtin_source().as_bytes().to_vec(),
        };
        let catalog = load_catalog(&raw).map_err(|e| ServeError::Config(format!("catalog: {e}")))?;

        if let Some(dir) = &config.static_dir {
            if !dir.is_dir() {
                return Err(ServeError::Config(format!("static dir {} does not exist", dir.display())));
            }
        }
        let store = open_store(config.data_dir.join("stories")).map_err(|e| match e {
            StoreError::Permission(p) => ServeError::Config(format!("no permission on data dir {}", p.display())),
            other => ServeError::Config(format!("data dir {}: {other}", config.data_dir.display())),
        })?;
        for bad in store.corruption_report() {
            tracing::warn!(path = %bad.path.display(), reason = %bad.reason, "skipping unreadable story file");
        }

        // changes whenever the file content changes, and names the pack version
        let etag = format!("\"{}-{}\"", catalog.catalog_version, &content_tag(&raw)[..16]);
        Ok(AppState {
            catalog: Arc::new(catalog),
            catalog_body: Bytes::from(raw),
            catalog_etag: etag,
            store: Arc::new(store),
            static_dir: config.static_dir.clone(),
            require_ending: config.require_ending,
            layout: PdfLayout::default(),
            clock: Arc::new(SystemClock),
            ids: Arc::new(RandomIds),
            allow_cross_origin: config.allow_cross_origin,
        })
    }

    pub fn with_clock(mut self, clock: impl Clock + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    pub fn with_ids(mut self, ids: impl IdSource + 'static) -> Self {
        self.ids = Arc::new(ids);
        self
    }

    pub fn catalog_etag(&self) -> &str {
        &self.catalog_etag
    }
}

pub fn router(state: AppState) -> Router {
    let cors = state.allow_cross_origin;
    let state = Arc::new(state);
    let app = Router::new()
        .route("/healthz", get(|| async { Json(serde_json::json!({"status": "ok"})) }))
        .nest("/api/v1", api::routes())
        .fallback(shell::serve_static)
        .method_not_allowed_fallback(|| async { ApiError::method_not_allowed() })
        .with_state(state);
    if cors {
        app.layer(CorsLayer::permissive())
    } else {
        app
    }
}

/// A running service. Dropping the handle leaves the server running until
/// the runtime stops; call [`ServiceHandle::shutdown`] to stop it cleanly.
pub struct ServiceHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.map_err(std::io::Error::other)?
    }

    /// Runs until the task ends on its own (e.g. after an external shutdown).
    pub async fn join(self) -> std::io::Result<()> {
        self.task.await.map_err(std::io::Error::other)?
    }
}

/// Validates the configuration, binds and starts serving in the background.
pub async fn serve(config: ServiceConfig) -> Result<ServiceHandle, ServeError> {
    let state = AppState::from_config(&config)?;
    serve_state(state, SocketAddr::new(config.host, config.port)).await
}

pub async fn serve_state(state: AppState, addr: SocketAddr) -> Result<ServiceHandle, ServeError> {
    let listener = TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })?;
    let addr = listener.local_addr().map_err(|source| ServeError::Bind { addr, source })?;
    let (stop, stopped) = oneshot::channel::<()>();
    let app = router(state);
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = stopped.await;
            })
            .await
    });
    tracing::info!(%addr, "listening");
    Ok(ServiceHandle { addr, stop: Some(stop), task })
}

/// Serves until SIGINT/SIGTERM, then drains in-flight requests.
pub async fn run_until_signal(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    // handlers go in before the address is announced
    let stop = shutdown_signal()?;
    let handle = serve(config).await?;
    println!("listening on {}", handle.base_url());
    stop.await;
    handle.shutdown().await?;
    Ok(())
}

#[cfg(unix)]
fn shutdown_signal() -> std::io::Result<impl std::future::Future<Output = ()>> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut interrupt = signal(SignalKind::interrupt())?;
    let mut terminate = signal(SignalKind::terminate())?;
    Ok(async move {
        tokio::select! {
            _ = interrupt.recv() => {}
            _ = terminate.recv() => {}
        }
    })
}

#[cfg(not(unix))]
fn shutdown_signal() -> std::io::Result<impl std::future::Future<Output = ()>> {
    Ok(async {
        let _ = tokio::signal::ctrl_c().await;
    })
}
