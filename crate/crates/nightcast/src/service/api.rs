use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use nightcast_core::{DeclareOutcome, Metric};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use super::error::ApiError;
use super::session::{GroupsDoc, SessionDoc};
use super::state::{AppState, JobDoc, Notice};
use crate::formats::ForecastDoc;
use crate::io::DatasetDoc;

/// JSON body whose rejections use the service's error format.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ApiError::bad_request("bad_request", e.body_text())),
        }
    }
}

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session).get(list_sessions))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/declarations", post(declare))
        .route("/api/sessions/{id}/forecast", get(get_forecast))
        .route("/api/sessions/{id}/groups", get(get_groups))
        .route("/api/sessions/{id}/optimize", post(start_optimize))
        .route("/api/sessions/{id}/apply/{job_id}", post(apply_job))
        .route("/api/sessions/{id}/events", get(events))
        .route("/api/jobs/{id}", get(get_job))
        .fallback(|| async { ApiError::not_found("not_found", "no such endpoint") })
        .with_state(state)
}

/// Either a bare dataset document or one wrapped with an initial grouping.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum CreateRequest {
    Wrapped {
        dataset: DatasetDoc,
        #[serde(default)]
        grouping: Option<Vec<u32>>,
    },
    Bare(DatasetDoc),
}

async fn create_session(
    State(state): Shared,
    Body(req): Body<serde_json::Value>,
) -> Result<impl IntoResponse, ApiError> {
    // Parse in two steps so dataset errors keep serde's message.
    let req: CreateRequest = serde_json::from_value(req.clone()).map_err(|_| {
        let inner = req.get("dataset").cloned().unwrap_or(req);
        match serde_json::from_value::<DatasetDoc>(inner) {
            Err(e) => ApiError::bad_request("invalid_dataset", e.to_string()),
            Ok(_) => ApiError::bad_request("bad_request", "malformed session request"),
        }
    })?;
    let (doc, grouping) = match req {
        CreateRequest::Wrapped { dataset, grouping } => (dataset, grouping),
        CreateRequest::Bare(d) => (d, None),
    };
    let s = state.create_session(doc, grouping)?;
    Ok((StatusCode::CREATED, Json(s.doc(None))))
}

#[derive(Serialize)]
struct SessionList {
    sessions: Vec<String>,
}

async fn list_sessions(State(state): Shared) -> Json<SessionList> {
    Json(SessionList {
        sessions: state.session_ids(),
    })
}

async fn get_session(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Json<SessionDoc>, ApiError> {
    let cell = state.session(&id)?;
    let active = cell.active_job.lock().ok().and_then(|a| a.clone());
    let s = cell
        .session
        .lock()
        .map_err(|_| ApiError::internal("state lock poisoned"))?;
    Ok(Json(s.doc(active)))
}

#[derive(Debug, Deserialize)]
pub struct DeclareRequest {
    pub station_id: String,
    pub votes: Vec<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DeclareResponse {
    pub revision: u64,
    /// `recorded`, or `unchanged` for an identical re-submission.
    pub status: String,
    pub forecast: Option<ForecastDoc>,
}

async fn declare(
    State(state): Shared,
    Path(id): Path<String>,
    Body(req): Body<DeclareRequest>,
) -> Result<Json<DeclareResponse>, ApiError> {
    let (outcome, s) = state.declare(&id, &req.station_id, &req.votes)?;
    Ok(Json(DeclareResponse {
        revision: s.revision,
        status: match outcome {
            DeclareOutcome::Recorded => "recorded",
            DeclareOutcome::Unchanged => "unchanged",
        }
        .into(),
        forecast: s.forecast().cloned(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct MetricQuery {
    pub metric: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ForecastResponse {
    pub revision: u64,
    pub metric: Metric,
    /// Parties of the selected metric (no `NV` for vald).
    pub parties: Vec<String>,
    pub values: Vec<f64>,
    pub forecast_digest: String,
    pub forecast: ForecastDoc,
}

async fn get_forecast(
    State(state): Shared,
    Path(id): Path<String>,
    Query(q): Query<MetricQuery>,
) -> Result<Json<ForecastResponse>, ApiError> {
    let metric: Metric =
        q.metric
            .as_deref()
            .unwrap_or("abs")
            .parse()
            .map_err(|e: nightcast_core::Error| {
                ApiError::bad_request("unknown_metric", e.to_string())
            })?;
    let cell = state.session(&id)?;
    let s = cell
        .session
        .lock()
        .map_err(|_| ApiError::internal("state lock poisoned"))?;
    let (Some(doc), Some(digest)) = (s.forecast(), s.forecast_digest()) else {
        return Err(ApiError::conflict(
            "no_declarations",
            "no forecast before the first declaration",
        ));
    };
    if metric == Metric::Vald && doc.pct_vald.is_none() {
        return Err(ApiError::conflict(
            "no_valid_votes",
            "the forecast contains no valid votes",
        ));
    }
    let (parties, values) = doc.view(metric);
    Ok(Json(ForecastResponse {
        revision: s.revision,
        metric,
        parties,
        values,
        forecast_digest: digest.to_string(),
        forecast: doc.clone(),
    }))
}

async fn get_groups(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Json<GroupsDoc>, ApiError> {
    let cell = state.session(&id)?;
    let s = cell
        .session
        .lock()
        .map_err(|_| ApiError::internal("state lock poisoned"))?;
    Ok(Json(s.groups()))
}

async fn start_optimize(
    State(state): Shared,
    Path(id): Path<String>,
    body: axum::body::Bytes,
) -> Result<impl IntoResponse, ApiError> {
    // An empty body means "all defaults".
    let overrides = if body.iter().all(u8::is_ascii_whitespace) {
        serde_json::Value::Null
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::bad_request("bad_request", format!("invalid JSON body: {e}")))?
    };
    let doc = state.start_job(&id, overrides)?;
    Ok((StatusCode::ACCEPTED, Json(doc)))
}

async fn get_job(State(state): Shared, Path(id): Path<String>) -> Result<Json<JobDoc>, ApiError> {
    state.job(&id).map(Json)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ApplyResponse {
    pub revision: u64,
    pub grouping: Vec<u32>,
    pub forecast_digest: Option<String>,
}

async fn apply_job(
    State(state): Shared,
    Path((id, job_id)): Path<(String, String)>,
) -> Result<Json<ApplyResponse>, ApiError> {
    let s = state.apply_job(&id, &job_id)?;
    Ok(Json(ApplyResponse {
        revision: s.revision,
        grouping: s.grouping.clone(),
        forecast_digest: s.forecast_digest().map(str::to_string),
    }))
}

fn sse_event(n: &Notice) -> SseEvent {
    let name = match n {
        Notice::Revision { .. } => "revision",
        Notice::Job { .. } => "job",
    };
    SseEvent::default()
        .event(name)
        .data(serde_json::to_string(n).expect("serializable notice"))
}

/// Server-sent events: the current revision first, then every change.
async fn events(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>, ApiError> {
    let cell = state.session(&id)?;
    let rx = cell.events.subscribe();
    let first = {
        let s = cell
            .session
            .lock()
            .map_err(|_| ApiError::internal("state lock poisoned"))?;
        Notice::Revision {
            revision: s.revision,
            forecast_digest: s.forecast_digest().map(str::to_string),
        }
    };
    let head = stream::once(async move { Ok(sse_event(&first)) });
    let tail = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(n) => return Some((Ok(sse_event(&n)), rx)),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    use futures::StreamExt;
    Ok(Sse::new(head.chain(tail)).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}
