//! HTTP surface: ingest, feeds, CSV export, setpoints and actuators.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use hydrostat_core::control::SetpointUpdate;
use serde_json::json;

use crate::service::{parse_rfc3339, FeedFilter, TelemetryError, TelemetryService};
use crate::store::{FieldValues, FIELD_COUNT};

type Params = Query<HashMap<String, String>>;
type Shared = State<Arc<TelemetryService>>;

impl IntoResponse for TelemetryError {
    fn into_response(self) -> Response {
        let status = match &self {
            TelemetryError::UnknownChannel(_) | TelemetryError::UnknownActuator(_) => {
                StatusCode::NOT_FOUND
            }
            TelemetryError::Unauthorized => StatusCode::UNAUTHORIZED,
            TelemetryError::RateLimited { .. } => StatusCode::TOO_MANY_REQUESTS,
            TelemetryError::Invalid(_) => StatusCode::BAD_REQUEST,
            TelemetryError::Conflict(_) => StatusCode::CONFLICT,
            TelemetryError::Config(_) | TelemetryError::Store(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let body = match &self {
            TelemetryError::Invalid(v) => json!({ "error": v.message, "field": v.field }),
            other => json!({ "error": other.to_string() }),
        };
        let mut response = (status, Json(body)).into_response();
        if let TelemetryError::RateLimited { retry_after } = self {
            response
                .headers_mut()
                .insert(header::RETRY_AFTER, HeaderValue::from(retry_after));
        }
        response
    }
}

fn api_key<'a>(params: &'a HashMap<String, String>, headers: &'a HeaderMap) -> Option<&'a str> {
    params
        .get("api_key")
        .map(String::as_str)
        .or_else(|| headers.get("x-api-key").and_then(|v| v.to_str().ok()))
}

fn write_key<'a>(
    params: &'a HashMap<String, String>,
    headers: &'a HeaderMap,
) -> Result<&'a str, TelemetryError> {
    api_key(params, headers).ok_or(TelemetryError::Unauthorized)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, TelemetryError> + Send + 'static,
) -> Result<T, TelemetryError> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(TelemetryError::Config(format!("worker failed: {e}"))))
}

async fn update(
    State(svc): Shared,
    Query(params): Params,
    headers: HeaderMap,
) -> Result<String, TelemetryError> {
    let key = write_key(&params, &headers)?.to_string();
    let channel = svc.channel_for_write_key(&key)?;
    let mut fields = FieldValues::default();
    for (i, slot) in fields.iter_mut().enumerate().take(FIELD_COUNT) {
        *slot = params.get(&format!("field{}", i + 1)).cloned();
    }
    let created_at = params
        .get("created_at")
        .map(|s| parse_rfc3339("created_at", s))
        .transpose()?;
    let id = blocking(move || svc.ingest_update(channel, &key, fields, created_at)).await?;
    Ok(id.to_string())
}

fn feed_filter(params: &HashMap<String, String>) -> Result<FeedFilter, TelemetryError> {
    if let Some(n) = params.get("results") {
        let n = n.parse().map_err(|_| {
            TelemetryError::Invalid(hydrostat_core::ValidationError::new(
                "results",
                format!("results `{n}` is not a non-negative integer"),
            ))
        })?;
        return Ok(FeedFilter::Last(n));
    }
    let start = params
        .get("start")
        .map(|s| parse_rfc3339("start", s))
        .transpose()?;
    let end = params
        .get("end")
        .map(|s| parse_rfc3339("end", s))
        .transpose()?;
    Ok(match (start, end) {
        (None, None) => FeedFilter::All,
        (start, end) => FeedFilter::Range { start, end },
    })
}

async fn feeds_json(
    State(svc): Shared,
    Path(id): Path<u64>,
    Query(params): Params,
    headers: HeaderMap,
) -> Result<Response, TelemetryError> {
    let filter = feed_filter(&params)?;
    Ok(Json(svc.feeds_json(id, api_key(&params, &headers), filter)?).into_response())
}

async fn feeds_csv(
    State(svc): Shared,
    Path(id): Path<u64>,
    Query(params): Params,
    headers: HeaderMap,
) -> Result<Response, TelemetryError> {
    let doc = svc.export_csv(id, api_key(&params, &headers))?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], doc).into_response())
}

async fn get_thresholds(
    State(svc): Shared,
    Path(id): Path<u64>,
    Query(params): Params,
    headers: HeaderMap,
) -> Result<Response, TelemetryError> {
    Ok(Json(svc.thresholds(id, api_key(&params, &headers))?).into_response())
}

async fn put_thresholds(
    State(svc): Shared,
    Path(id): Path<u64>,
    Query(params): Params,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, TelemetryError> {
    let key = write_key(&params, &headers)?;
    let update: SetpointUpdate = serde_json::from_slice(&body).map_err(|e| {
        TelemetryError::Invalid(hydrostat_core::ValidationError::new(
            "body",
            format!("bad setpoint payload: {e}"),
        ))
    })?;
    Ok(Json(svc.set_thresholds(id, key, &update)?).into_response())
}

async fn get_actuators(
    State(svc): Shared,
    Path(id): Path<u64>,
    Query(params): Params,
    headers: HeaderMap,
) -> Result<Response, TelemetryError> {
    Ok(Json(svc.actuators(id, api_key(&params, &headers))?).into_response())
}

async fn put_override(
    State(svc): Shared,
    Path((id, name)): Path<(u64, String)>,
    Query(params): Params,
    headers: HeaderMap,
    body: String,
) -> Result<Response, TelemetryError> {
    let key = write_key(&params, &headers)?;
    Ok(Json(svc.set_override(id, key, &name, &body)?).into_response())
}

pub fn router(service: Arc<TelemetryService>) -> Router {
    Router::new()
        .route("/update", get(update).post(update))
        .route("/channels/{id}/feeds.json", get(feeds_json))
        .route("/channels/{id}/feeds.csv", get(feeds_csv))
        .route(
            "/channels/{id}/thresholds",
            get(get_thresholds).put(put_thresholds),
        )
        .route("/channels/{id}/actuators", get(get_actuators))
        .route(
            "/channels/{id}/actuators/{name}/override",
            axum::routing::put(put_override),
        )
        .with_state(service)
}
