use std::collections::BTreeSet;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Extension, Json, Router};
use askwell_core::compare::build_report;
use askwell_core::nl2sql::{answer_question, SqlResult};
use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::jobs::run_job;
use crate::sse::event_stream;
use crate::state::AppState;
use crate::store::{now_secs, FeedbackRecord, Job, JobStatus, Ratings, Session};
use crate::ServerError;

#[derive(Debug)]
pub(crate) struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<ServerError> for ApiError {
    fn from(e: ServerError) -> Self {
        tracing::error!("{e}");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal error")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Short digest identifying the caller's token; the token itself is never
/// stored or logged.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Caller(String);

fn token_ref(token: &str) -> String {
    Sha256::digest(token.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn random_id(prefix: &str) -> String {
    let mut bytes = [0u8; 16];
    rand::rngs::OsRng.fill_bytes(&mut bytes);
    let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
    format!("{prefix}{hex}")
}

async fn require_token(State(state): State<AppState>, mut req: Request, next: Next) -> Response {
    let token = req
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .filter(|t| state.tokens.contains(*t))
        .map(token_ref);
    match token {
        Some(r) => {
            req.extensions_mut().insert(Caller(r));
            next.run(req).await
        }
        _ => ApiError::new(StatusCode::UNAUTHORIZED, "missing or invalid bearer token").into_response(),
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed body: {e}")))
}

fn owned_session(state: &AppState, caller: &Caller, id: &str) -> ApiResult<Session> {
    match state.store.session(id)? {
        Some(s) if s.token_ref == caller.0 => Ok(s),
        _ => Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown session '{id}'"))),
    }
}

fn owned_job(state: &AppState, caller: &Caller, id: &str) -> ApiResult<Job> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, format!("unknown job '{id}'"));
    let job = state.store.job(id)?.ok_or_else(not_found)?;
    owned_session(state, caller, &job.session_id).map_err(|_| not_found())?;
    Ok(job)
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreateSession {
    database_id: Option<String>,
}

async fn create_session(
    State(state): State<AppState>,
    Extension(caller): Extension<Caller>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        parse_body(&body)?
    };
    if let Some(db) = &req.database_id {
        if !state.pipeline.sandbox.registry().contains(db) {
            return Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown database '{db}'")));
        }
    }
    let session = Session {
        session_id: random_id(""),
        created_at: now_secs(),
        database_id: req.database_id,
        token_ref: caller.0,
    };
    state.store.create_session(&session)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "sessionId": session.session_id,
            "createdAt": session.created_at,
            "databaseId": session.database_id,
        })),
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SubmitQuestion {
    session_id: String,
    question: String,
    #[serde(default)]
    decision_context: String,
    database_id: Option<String>,
    seed: Option<u64>,
}

async fn submit_question(
    State(state): State<AppState>,
    Extension(caller): Extension<Caller>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: SubmitQuestion = parse_body(&body)?;
    if req.question.trim().is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "question is empty"));
    }
    let session = owned_session(&state, &caller, &req.session_id)?;
    let Some(database_id) = req.database_id.or(session.database_id) else {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "databaseId is required"));
    };
    if !state.pipeline.sandbox.registry().contains(&database_id) {
        return Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown database '{database_id}'")));
    }
    let job = Job {
        job_id: random_id("job-"),
        session_id: session.session_id,
        status: JobStatus::Queued,
        question: req.question.trim().to_string(),
        decision_context: req.decision_context.trim().to_string(),
        database_id,
        seed: req.seed.unwrap_or(state.default_seed),
        run_id: None,
        error: None,
    };
    if !state.store.create_job_capped(&job, state.max_jobs_per_session)? {
        return Err(ApiError::new(StatusCode::TOO_MANY_REQUESTS, "session already has a running job"));
    }
    state.hub.open(&job.job_id);
    let job_id = job.job_id.clone();
    tokio::spawn(run_job(state.clone(), job));
    Ok((StatusCode::ACCEPTED, Json(json!({ "jobId": job_id }))).into_response())
}

async fn stream(
    State(state): State<AppState>,
    Extension(caller): Extension<Caller>,
    Path(job_id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    owned_job(&state, &caller, &job_id)?;
    let after = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok())
        .unwrap_or(0);
    let rx = state.hub.subscribe(&job_id);
    let body = Body::from_stream(event_stream(state.store.clone(), job_id, after, rx));
    Ok(Response::builder()
        .status(StatusCode::OK)
        .header(header::CONTENT_TYPE, "text/event-stream")
        .header(header::CACHE_CONTROL, "no-cache")
        .body(body)
        .expect("static response parts"))
}

async fn job_status(
    State(state): State<AppState>,
    Extension(caller): Extension<Caller>,
    Path(job_id): Path<String>,
) -> ApiResult<Response> {
    let job = owned_job(&state, &caller, &job_id)?;
    let run = match &job.run_id {
        Some(id) => state.store.run(id)?,
        None => None,
    };
    Ok(Json(json!({ "job": job, "run": run })).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SelectSuggestions {
    job_id: String,
    suggestion_indices: Vec<usize>,
}

async fn select(
    State(state): State<AppState>,
    Extension(caller): Extension<Caller>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: SelectSuggestions = parse_body(&body)?;
    let job = owned_job(&state, &caller, &req.job_id)?;
    if job.status != JobStatus::Done {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("job is {}, not done", job.status.as_str()),
        ));
    }
    let texts = state.store.suggestion_texts(&job.job_id)?;
    let unique: BTreeSet<usize> = req.suggestion_indices.iter().copied().collect();
    if req.suggestion_indices.is_empty()
        || unique.len() != req.suggestion_indices.len()
        || req.suggestion_indices.iter().any(|i| *i >= texts.len())
    {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("suggestionIndices must be distinct indices below {}", texts.len()),
        ));
    }
    let run = match &job.run_id {
        Some(id) => state.store.run(id)?,
        None => None,
    };
    let original = state
        .store
        .original_result(&job.job_id)?
        .unwrap_or_else(|| Err("original question was not executed".into()));
    let chosen: Vec<(usize, String)> = req.suggestion_indices.iter().map(|i| (*i, texts[*i].clone())).collect();

    let worker = state.clone();
    let db = job.database_id.clone();
    let question = job.question.clone();
    let report = tokio::task::spawn_blocking(move || {
        let pipeline = &worker.pipeline;
        let mut bias_ids: Vec<String> = Vec::new();
        if let Some(run) = &run {
            for (i, _) in &chosen {
                if let Some(s) = run.suggestions.get(*i) {
                    bias_ids.extend(s.addressed_bias_ids.iter().cloned());
                }
            }
        }
        let mut biases = Vec::new();
        for id in bias_ids {
            if let Some(b) = pipeline.taxonomy.get(&id) {
                if !biases.iter().any(|x: &askwell_core::kb::BiasEntry| x.id == b.id) {
                    biases.push(b.clone());
                }
            }
        }
        let refined = chosen
            .into_iter()
            .map(|(_, text)| {
                let r = answer_question(&text, None, &db, &pipeline.sandbox, &pipeline.gateway)
                    .map(|g| g.result)
                    .map_err(|e| e.to_string());
                (text, r)
            })
            .collect();
        let original = original.unwrap_or_else(|_| SqlResult {
            sql: String::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            total_row_count: 0,
            truncated: false,
            elapsed_ms: 0,
        });
        build_report(&question, &original, refined, &biases, &pipeline.gateway)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("comparison worker stopped: {e}")))?;

    let id = random_id("cmp-");
    state.store.save_comparison(&id, &job.job_id, &report)?;
    Ok((StatusCode::CREATED, Json(json!({ "comparisonId": id }))).into_response())
}

async fn comparison(
    State(state): State<AppState>,
    Extension(caller): Extension<Caller>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, format!("unknown comparison '{id}'"));
    let (job_id, report) = state.store.comparison(&id)?.ok_or_else(not_found)?;
    owned_job(&state, &caller, &job_id).map_err(|_| not_found())?;
    Ok(Json(report).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SubmitFeedback {
    session_id: String,
    ratings: Ratings,
    comment: Option<String>,
}

async fn feedback(
    State(state): State<AppState>,
    Extension(caller): Extension<Caller>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: SubmitFeedback = parse_body(&body)?;
    if let Some((name, v)) = req.ratings.all().into_iter().find(|(_, v)| !(1..=5).contains(v)) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("{name} rating {v} is outside 1-5"),
        ));
    }
    owned_session(&state, &caller, &req.session_id)?;
    state.store.save_feedback(&FeedbackRecord {
        session_id: req.session_id,
        ratings: req.ratings,
        comment: req.comment.filter(|c| !c.trim().is_empty()),
    })?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub fn build_router(state: AppState) -> Router {
    let api = Router::new()
        .route("/api/session", post(create_session))
        .route("/api/question", post(submit_question))
        .route("/api/stream/{job_id}", get(stream))
        .route("/api/job/{job_id}", get(job_status))
        .route("/api/select", post(select))
        .route("/api/comparison/{id}", get(comparison))
        .route("/api/feedback", post(feedback))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new().route("/healthz", get(healthz)).merge(api).with_state(state)
}
