use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;
use tower_http::cors::CorsLayer;

use super::jobs::{JobError, JobService};
use super::RunConfig;
use crate::scenario::{CaseLabel, CaseSpec};

const API_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct CasePreset {
    label: CaseLabel,
    name: &'static str,
    spec: CaseSpec,
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (
        status,
        Json(json!({ "schema_version": API_SCHEMA_VERSION, "error": message.to_string() })),
    )
        .into_response()
}

fn job_error(e: JobError) -> Response {
    let status = match e {
        JobError::UnknownId(_) => StatusCode::NOT_FOUND,
        JobError::NotReady { .. } => StatusCode::CONFLICT,
        JobError::Failed { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        JobError::InvalidConfig(_) => StatusCode::BAD_REQUEST,
        JobError::Storage(_) | JobError::Timeout(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    error(status, e)
}

async fn submit(State(service): State<Arc<JobService>>, body: Bytes) -> Response {
    let config: RunConfig = match serde_json::from_slice(&body) {
        Ok(c) => c,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid config: {e}")),
    };
    match service.submit_job(config) {
        Ok(id) => (
            StatusCode::ACCEPTED,
            Json(json!({ "schema_version": API_SCHEMA_VERSION, "id": id })),
        )
            .into_response(),
        Err(e) => job_error(e),
    }
}

async fn status(State(service): State<Arc<JobService>>, Path(id): Path<String>) -> Response {
    match service.job_status(&id) {
        Ok(record) => Json(record).into_response(),
        Err(e) => job_error(e),
    }
}

async fn report(State(service): State<Arc<JobService>>, Path(id): Path<String>) -> Response {
    match service.job_result(&id) {
        Ok(bundle) => Json(bundle.as_ref().clone()).into_response(),
        Err(e) => job_error(e),
    }
}

async fn list(State(service): State<Arc<JobService>>) -> Response {
    Json(json!({ "schema_version": API_SCHEMA_VERSION, "jobs": service.list_jobs() })).into_response()
}

async fn cases() -> Response {
    let cases: Vec<CasePreset> = CaseLabel::ALL
        .iter()
        .map(|&label| CasePreset {
            label,
            name: label.name(),
            spec: CaseSpec::preset(label),
        })
        .collect();
    Json(json!({ "schema_version": API_SCHEMA_VERSION, "cases": cases })).into_response()
}

/// `POST /jobs`, `GET /jobs`, `GET /jobs/{id}`, `GET /jobs/{id}/report` and
/// `GET /meta/cases`, with permissive CORS for a browser client.
pub fn router(service: Arc<JobService>) -> Router {
    Router::new()
        .route("/jobs", post(submit).get(list))
        .route("/jobs/{id}", get(status))
        .route("/jobs/{id}/report", get(report))
        .route("/meta/cases", get(cases))
        .layer(CorsLayer::permissive())
        .with_state(service)
}

/// Serves the API until ctrl-c.
pub async fn serve(addr: SocketAddr, service: Arc<JobService>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
