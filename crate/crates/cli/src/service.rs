//! Stateless HTTP service.
//!
//! Every request is parsed and checked in isolation on the blocking pool;
//! the only shared data is the immutable state limit.

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bpmn_soundness::quickfix::Edit;
use bpmn_soundness::CheckError;
use serde::Deserialize;
use serde_json::json;

use crate::{apply_to_xml, check_xml, parse_properties, ApplyError, CheckOptions, FixSelector, PipelineError};

pub const PORT_ENV: &str = "BPMN_SOUNDNESS_PORT";
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, Copy)]
pub struct ServiceConfig {
    /// Per-request state limit; requests may lower it but not raise it.
    pub max_states: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckQuery {
    pub properties: Option<String>,
    #[serde(default)]
    pub quick_fixes: bool,
    pub max_states: Option<usize>,
    #[serde(default)]
    pub livelocks: bool,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApplyRequest {
    pub bpmn_xml: String,
    pub fix_id: Option<String>,
    pub edits: Option<Vec<Edit>>,
}

pub fn router(config: ServiceConfig) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/check", post(check_handler))
        .route("/apply-fix", post(apply_handler))
        .with_state(config)
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn limit_response(err: &CheckError) -> Response {
    let body = match err {
        CheckError::StateSpaceLimitExceeded {
            limit,
            explored,
            violated,
        } => json!({
            "error": err.to_string(),
            "limit": limit,
            "explored": explored,
            "violated": violated,
        }),
        CheckError::InvalidConfig => return error(StatusCode::BAD_REQUEST, err.to_string()),
    };
    (StatusCode::UNPROCESSABLE_ENTITY, Json(body)).into_response()
}

async fn check_handler(State(config): State<ServiceConfig>, Query(query): Query<CheckQuery>, body: String) -> Response {
    let properties = match parse_properties(query.properties.as_deref().unwrap_or("")) {
        Ok(p) => p,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let options = CheckOptions {
        properties,
        max_states: query.max_states.map_or(config.max_states, |m| m.min(config.max_states)),
        quick_fixes: query.quick_fixes,
        detect_livelocks: query.livelocks,
    };
    let outcome = tokio::task::spawn_blocking(move || check_xml(&body, &options)).await;
    match outcome {
        Ok(Ok(report)) => Json(report).into_response(),
        Ok(Err(PipelineError::Invalid(issues))) => {
            (StatusCode::BAD_REQUEST, Json(json!({ "issues": issues }))).into_response()
        }
        Ok(Err(PipelineError::Check(e))) => limit_response(&e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn apply_handler(State(config): State<ServiceConfig>, Json(request): Json<ApplyRequest>) -> Response {
    let selector = match (request.fix_id, request.edits) {
        (Some(id), None) => FixSelector::Id(id),
        (None, Some(edits)) => FixSelector::Edits(edits),
        _ => return error(StatusCode::BAD_REQUEST, "exactly one of fixId and edits is required"),
    };
    let xml = request.bpmn_xml;
    let outcome = tokio::task::spawn_blocking(move || apply_to_xml(&xml, &selector, config.max_states)).await;
    match outcome {
        Ok(Ok(fixed)) => Json(fixed).into_response(),
        Ok(Err(ApplyError::Invalid(issues))) => {
            (StatusCode::BAD_REQUEST, Json(json!({ "issues": issues }))).into_response()
        }
        Ok(Err(ApplyError::Check(e))) => limit_response(&e),
        Ok(Err(e @ (ApplyError::UnknownFix(_) | ApplyError::Fix(_)))) => error(StatusCode::CONFLICT, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}
