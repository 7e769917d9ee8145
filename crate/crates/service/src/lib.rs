//! JSON API over [`SessionStore`] plus static hosting for the annotation UI.
//!
//! | method | path | body / query | reply |
//! |---|---|---|---|
//! | `POST` | `/sessions` | [`CreateSession`] | `201` [`SessionCreated`] |
//! | `GET` | `/sessions` | | list of [`SessionInfo`] |
//! | `GET` | `/sessions/:id/next` | | [`NextItem`] |
//! | `POST` | `/sessions/:id/ratings` | [`SubmitRating`] | [`RatingAck`] |
//! | `GET` | `/sessions/:id/export.csv` | | CSV |
//! | `GET` | `/summary` | `task`, `model` | [`Summary`] |
//! | `GET` | `/rubric` | | [`RubricDefinition`] |
//!
//! Errors reply `{"error": <code>, "message": <text>}` with a matching
//! status code.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use styledistill_core::human_eval::{
    EvalError, EvalItem, NextItem, Progress, RatingAck, RubricDefinition, SessionStore, Summary,
    SummaryFilter, DEFAULT_SESSION_SIZE,
};
use tower_http::services::ServeDir;

#[derive(Clone)]
pub struct AppState {
    store: Arc<SessionStore>,
}

impl AppState {
    pub fn new(store: SessionStore) -> Self {
        AppState {
            store: Arc::new(store),
        }
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }
}

/// Either an explicit item list, or a pool to draw `size` items from with
/// `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub annotator_id: String,
    #[serde(default)]
    pub items: Vec<EvalItem>,
    #[serde(default)]
    pub pool: Vec<EvalItem>,
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub annotator_id: String,
    pub progress: Progress,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitRating {
    pub item_id: String,
    pub rate: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub struct ApiError(EvalError);

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        ApiError(e)
    }
}

/// Status and stable error code for each failure.
pub fn classify(e: &EvalError) -> (StatusCode, &'static str) {
    match e {
        EvalError::EmptyItemList => (StatusCode::UNPROCESSABLE_ENTITY, "empty_item_list"),
        EvalError::DuplicateItemId(_) => (StatusCode::UNPROCESSABLE_ENTITY, "duplicate_item_id"),
        EvalError::InvalidItem { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_item"),
        EvalError::InvalidRate(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_rate"),
        EvalError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
        EvalError::UnknownItem(_) => (StatusCode::NOT_FOUND, "unknown_item"),
        EvalError::NoRatings => (StatusCode::NOT_FOUND, "no_ratings"),
        EvalError::AlreadyRated(_) => (StatusCode::CONFLICT, "already_rated"),
        EvalError::InvalidRubric(_) => (StatusCode::INTERNAL_SERVER_ERROR, "invalid_rubric"),
        EvalError::CorruptLog { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "corrupt_log"),
        EvalError::Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = classify(&self.0);
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        let body = ErrorBody {
            error: code.into(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

/// Runs a blocking store call off the async workers.
async fn blocking<T, F>(state: AppState, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&SessionStore) -> Result<T, EvalError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&state.store))
        .await
        .map_err(|e| ApiError(EvalError::Storage(e.to_string())))?
        .map_err(ApiError)
}

async fn create_session(
    State(state): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let created = blocking(state, move |store| {
        let id = if req.items.is_empty() && !req.pool.is_empty() {
            let size = req.size.unwrap_or(DEFAULT_SESSION_SIZE);
            store.create_session_from_pool(&req.pool, &req.annotator_id, size, req.seed)?
        } else {
            store.create_session(req.items, &req.annotator_id)?
        };
        let progress = store.session(&id)?.progress();
        Ok(SessionCreated {
            session_id: id,
            progress,
        })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn list_sessions(State(state): State<AppState>) -> Result<Json<Vec<SessionInfo>>, ApiError> {
    let list = blocking(state, |store| {
        Ok(store
            .sessions()
            .into_iter()
            .map(|s| SessionInfo {
                progress: s.progress(),
                session_id: s.session_id,
                annotator_id: s.annotator_id,
            })
            .collect())
    })
    .await?;
    Ok(Json(list))
}

async fn next_item(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<NextItem>, ApiError> {
    Ok(Json(
        blocking(state, move |store| store.next_item(&id)).await?,
    ))
}

async fn submit_rating(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<SubmitRating>,
) -> Result<Json<RatingAck>, ApiError> {
    Ok(Json(
        blocking(state, move |store| {
            store.submit_rating(&id, &req.item_id, &req.rate)
        })
        .await?,
    ))
}

async fn export_csv(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let filename = format!("attachment; filename=\"{id}.csv\"");
    let body = blocking(state, move |store| store.export_csv(&id)).await?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_owned()),
            (header::CONTENT_DISPOSITION, filename),
        ],
        body,
    )
        .into_response())
}

async fn summary(
    State(state): State<AppState>,
    Query(filter): Query<SummaryFilter>,
) -> Result<Json<Summary>, ApiError> {
    let filter = SummaryFilter {
        task: filter.task.filter(|t| !t.is_empty()),
        model: filter.model.filter(|m| !m.is_empty()),
    };
    Ok(Json(
        blocking(state, move |store| store.summarize(&filter)).await?,
    ))
}

async fn rubric(State(state): State<AppState>) -> Json<RubricDefinition> {
    Json(state.store.rubric().clone())
}

/// API routes, plus static files from `static_dir` for every other path.
pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/:id/next", get(next_item))
        .route("/sessions/:id/ratings", post(submit_rating))
        .route("/sessions/:id/export.csv", get(export_csv))
        .route("/summary", get(summary))
        .route("/rubric", get(rubric))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    pub rubric: RubricDefinition,
}

/// Opens the store under `data_dir` and serves until the process ends.
pub async fn serve(options: ServeOptions) -> std::io::Result<()> {
    let data_dir = options.data_dir.clone();
    let rubric = options.rubric.clone();
    let store = tokio::task::spawn_blocking(move || SessionStore::open(data_dir, rubric))
        .await
        .map_err(std::io::Error::other)?
        .map_err(std::io::Error::other)?;
    let app = router(AppState::new(store), options.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(options.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, app).await
}
