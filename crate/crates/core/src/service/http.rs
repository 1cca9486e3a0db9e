//! JSON-over-HTTP front end for [`StudyService`].

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use super::{ExportFormat, RatingItem, ServiceError, StudyService};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct SubmitRequest {
    pub rater_id: String,
    pub group_id: String,
    pub items: Vec<RatingItem>,
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub format: Option<String>,
}

type Shared = Arc<StudyService>;

/// Routes: `POST /raters`, `GET /tasks/{rater_id}`, `POST /ratings`,
/// `GET /status`, `GET /export?format=csv|json`.
pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/raters", post(register))
        .route("/tasks/{rater_id}", get(task))
        .route("/ratings", post(submit))
        .route("/status", get(status))
        .route("/export", get(export))
        .with_state(service)
}

async fn register(State(svc): State<Shared>) -> Result<Response, ServiceError> {
    let reg = svc.register_rater()?;
    Ok((StatusCode::CREATED, Json(reg)).into_response())
}

async fn task(
    State(svc): State<Shared>,
    Path(rater_id): Path<String>,
) -> Result<Response, ServiceError> {
    Ok(Json(svc.get_task(&rater_id)?).into_response())
}

async fn submit(
    State(svc): State<Shared>,
    Json(req): Json<SubmitRequest>,
) -> Result<Response, ServiceError> {
    let ack = svc.submit_ratings(&req.rater_id, &req.group_id, req.items)?;
    tracing::debug!(rater = %req.rater_id, group = %req.group_id, "ratings stored");
    Ok(Json(ack).into_response())
}

async fn status(State(svc): State<Shared>) -> Response {
    Json(svc.completion_status()).into_response()
}

async fn export(
    State(svc): State<Shared>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ServiceError> {
    let format = match q.format.as_deref() {
        None => ExportFormat::Csv,
        Some(f) => f.parse().map_err(ServiceError::InvalidExport)?,
    };
    let body = svc.export(format)?;
    let content_type = match format {
        ExportFormat::Csv => "text/csv; charset=utf-8",
        ExportFormat::Json => "application/json",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}
