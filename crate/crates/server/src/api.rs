//! JSON API under `/api/v1`.

use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use cuento_core::pdf::{render_pdf, PdfError};
use cuento_core::store::StoreError;
use cuento_core::story::StoryDraft;
use cuento_core::Story;

use crate::error::ApiError;
use crate::AppState;

pub(crate) fn routes() -> Router<Arc<AppState>> {
    Router::new()
        .route("/catalog", get(catalog))
        .route("/catalog/{part}", get(catalog_part))
        .route("/stories", get(list_stories).post(create_story))
        .route("/stories/{id}", get(get_story).delete(delete_story))
        .route("/stories/{id}/pdf", get(story_pdf))
}

/// True when an `If-None-Match` header lists `etag` (or `*`).
pub(crate) fn etag_matches(headers: &HeaderMap, etag: &str) -> bool {
    headers
        .get_all(header::IF_NONE_MATCH)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .map(|t| t.trim())
        .any(|t| t == "*" || t.trim_start_matches("W/") == etag)
}

fn conditional_json(headers: &HeaderMap, etag: &str, body: Bytes) -> Response {
    let etag_value = HeaderValue::from_str(etag).expect("etag is ascii");
    if etag_matches(headers, etag) {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag_value)]).into_response();
    }
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::CACHE_CONTROL, HeaderValue::from_static("no-cache")),
            (header::ETAG, etag_value),
        ],
        body,
    )
        .into_response()
}

async fn catalog(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    conditional_json(&headers, &state.catalog_etag, state.catalog_body.clone())
}

async fn catalog_part(
    State(state): State<Arc<AppState>>,
    Path(part): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let c = &state.catalog;
    let body = match part.as_str() {
        "functions" => serde_json::to_vec(&c.functions),
        "characters" => serde_json::to_vec(&c.characters),
        "situations" => serde_json::to_vec(&c.situations),
        other => return Err(ApiError::not_found(format!("no catalog section {other:?}"))),
    }
    .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(conditional_json(&headers, &state.catalog_etag, body.into()))
}

fn story_json(story: &Story) -> serde_json::Value {
    serde_json::from_slice(&story.to_document()).expect("story document is JSON")
}

fn store_error(e: StoreError) -> ApiError {
    match e {
        StoreError::NotFound(id) => ApiError::not_found(format!("story {id} not found")),
        StoreError::DuplicateId(id) => {
            ApiError::new(StatusCode::CONFLICT, crate::error::ErrorCode::DuplicateId, format!("story {id} already exists"))
        }
        StoreError::InvalidStory(v) => ApiError::invalid_story(v.to_string()),
        other => ApiError::internal(other.to_string()),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))
}

async fn list_stories(State(state): State<Arc<AppState>>) -> Json<Vec<serde_json::Value>> {
    Json(state.store.list_stories().iter().map(|r| story_json(&r.story)).collect())
}

async fn create_story(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let draft: StoryDraft =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed story: {e}")))?;
    let story = draft.into_story(state.clock.now(), || state.ids.next_id());
    story.validate(Some(&state.catalog)).map_err(|v| ApiError::invalid_story(v.to_string()))?;
    let last = state.catalog.function_count();
    if state.require_ending && !story.fragments.iter().any(|f| f.function_id == last) {
        return Err(ApiError::invalid_story(format!("the ending card (function {last}) must be written")));
    }

    let store = state.store.clone();
    let record = blocking(move || store.save_story(&story)).await?.map_err(store_error)?;
    let location = format!("/api/v1/stories/{}", record.story.id);
    Ok((
        StatusCode::CREATED,
        [(header::LOCATION, HeaderValue::from_str(&location).map_err(|e| ApiError::internal(e.to_string()))?)],
        Json(story_json(&record.story)),
    )
        .into_response())
}

async fn get_story(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let story = state.store.get_story(&id).map_err(store_error)?;
    Ok(Json(story_json(&story)).into_response())
}

async fn delete_story(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let store = state.store.clone();
    blocking(move || store.delete_story(&id)).await?.map_err(store_error)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn story_pdf(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let story = state.store.get_story(&id).map_err(store_error)?;
    let filename = format!("{}.pdf", story.slug());
    let s = state.clone();
    let bytes = blocking(move || render_pdf(&story, &s.catalog, &s.layout)).await?.map_err(|e| match e {
        PdfError::UnresolvedReference(r) => ApiError::invalid_story(format!("story references {r} missing from the catalog")),
        PdfError::Layout(m) => ApiError::internal(m),
    })?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/pdf".to_owned()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{filename}\"")),
        ],
        Body::from(bytes),
    )
        .into_response())
}
