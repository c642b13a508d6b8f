//! App shell: entry page, web manifest, service worker and static assets.
//!
//! Files under the configured static directory take precedence; the embedded
//! defaults keep the service installable when no frontend build is present.

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};

use crate::error::ApiError;
use crate::AppState;

const EMBEDDED: &[(&str, &[u8])] = &[
    ("index.html", include_bytes!("../assets/index.html")),
    ("manifest.webmanifest", include_bytes!("../assets/manifest.webmanifest")),
    ("sw.js", include_bytes!("../assets/sw.js")),
    ("icons/icon-192.png", include_bytes!("../assets/icons/icon-192.png")),
    ("icons/icon-512.png", include_bytes!("../assets/icons/icon-512.png")),
];

const ENTRY_PAGE: &str = "index.html";

pub fn content_type(path: &str) -> &'static str {
    match Path::new(path).extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" => "application/json",
        "webmanifest" => "application/manifest+json",
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "svg" => "image/svg+xml",
        "ico" => "image/x-icon",
        "woff2" => "font/woff2",
        "txt" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

fn cache_control(path: &str) -> &'static str {
    match path {
        "sw.js" | "index.html" | "manifest.webmanifest" => "no-cache",
        _ => "public, max-age=3600",
    }
}

/// Relative path with only normal components, or `None`.
fn sanitize(path: &str) -> Option<PathBuf> {
    let rel = Path::new(path);
    rel.components().all(|c| matches!(c, Component::Normal(_))).then(|| rel.to_path_buf())
}

async fn lookup(static_dir: Option<&Path>, path: &str) -> Option<Vec<u8>> {
    if let (Some(dir), Some(rel)) = (static_dir, sanitize(path)) {
        let full = dir.join(rel);
        if full.is_file() {
            if let Ok(bytes) = tokio::fs::read(&full).await {
                return Some(bytes);
            }
        }
    }
    EMBEDDED.iter().find(|(name, _)| *name == path).map(|(_, bytes)| bytes.to_vec())
}

fn file_response(path: &str, bytes: Vec<u8>) -> Response {
    (
        [(header::CONTENT_TYPE, content_type(path)), (header::CACHE_CONTROL, cache_control(path))],
        bytes,
    )
        .into_response()
}

pub(crate) async fn serve_static(State(state): State<Arc<AppState>>, method: Method, uri: Uri) -> Response {
    if method != Method::GET && method != Method::HEAD {
        return ApiError::method_not_allowed().into_response();
    }
    let path = uri.path().trim_start_matches('/');
    if path == "api" || path.starts_with("api/") {
        return ApiError::not_found(format!("no endpoint {}", uri.path())).into_response();
    }
    let path = if path.is_empty() { ENTRY_PAGE } else { path };
    let static_dir = state.static_dir.as_deref();

    if let Some(bytes) = lookup(static_dir, path).await {
        return file_response(path, bytes);
    }
    let last = path.rsplit('/').next().unwrap_or(path);
    if last.contains('.') {
        return ApiError::not_found(format!("no asset {}", uri.path())).into_response();
    }
    // client-side route: hand back the entry page
    match lookup(static_dir, ENTRY_PAGE).await {
        Some(bytes) => file_response(ENTRY_PAGE, bytes),
        None => (StatusCode::INTERNAL_SERVER_ERROR, "entry page missing").into_response(),
    }
}
