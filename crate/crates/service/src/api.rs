//! HTTP/JSON surface of the gate.
//!
//! Every 4xx/5xx body is `{"error": code, ...}` with `code` from a fixed set:
//! the [`GateError`] codes plus `invalid_request`, `invalid_token`,
//! `not_found`, `method_not_allowed` and `internal`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use xnogate_core::{Clock, Gate, GateError, NodeReader, Session, SessionId};

pub struct AppState {
    pub gate: Arc<Gate>,
    pub node: Arc<dyn NodeReader>,
    pub clock: Arc<dyn Clock>,
    pub requests: AtomicU64,
}

impl AppState {
    fn now(&self) -> u64 {
        self.clock.now_unix()
    }

    /// Cheap liveness probe: one account_info on the deposit account.
    pub async fn node_reachable(&self) -> bool {
        self.node
            .account_info(&self.gate.settings().deposit_account)
            .await
            .is_ok()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str) -> Self {
        ApiError {
            status,
            body: json!({ "error": code }),
        }
    }

    fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.body[key] = value.into();
        self
    }
}

impl From<GateError> for ApiError {
    fn from(e: GateError) -> Self {
        let status = match &e {
            GateError::InvalidAddress(_) => StatusCode::BAD_REQUEST,
            GateError::AccountNotFound | GateError::SessionNotFound => StatusCode::NOT_FOUND,
            GateError::TooManyOpenSessions => StatusCode::TOO_MANY_REQUESTS,
            GateError::NodeUnavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            GateError::SessionExpired => StatusCode::GONE,
            GateError::WrongState(_) | GateError::RepresentativeMismatch { .. } => {
                StatusCode::CONFLICT
            }
            GateError::PaymentNotFound
            | GateError::Underpaid { .. }
            | GateError::UnconfirmedPayment => StatusCode::PAYMENT_REQUIRED,
            GateError::StorageFailure(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let err = ApiError::new(status, e.code());
        match e {
            GateError::InvalidAddress(reason) => err.with("reason", reason.code()),
            GateError::WrongState(state) => err.with("state", state.as_str()),
            GateError::RepresentativeMismatch { observed } => {
                err.with("observed", observed.to_string())
            }
            GateError::Underpaid { best_amount } => {
                err.with("best_amount", best_amount.to_string())
            }
            GateError::StorageFailure(msg) => {
                tracing::error!(%msg, "storage failure");
                err
            }
            GateError::NodeUnavailable(msg) => {
                tracing::warn!(%msg, "node unavailable");
                err
            }
            _ => err,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

/// Public view of a session. Never includes the token.
pub fn session_view(s: &Session) -> Value {
    let mut v = json!({
        "session_id": s.id.to_string(),
        "state": s.state.as_str(),
        "account": s.payer.to_string(),
        "challenge_representative": s.challenge_representative.to_string(),
        "frontier_height_at_creation": s.frontier_height_at_creation,
        "created_at": s.created_at,
        "expires_at": s.expires_at,
    });
    if let Some(spec) = s.payment_spec() {
        v["deposit_account"] = spec.deposit_account.to_string().into();
        v["amount_raw"] = spec.price.to_string().into();
        v["payment_uri"] = spec.payment_uri.into();
        v["pay_by"] = spec.pay_by.into();
    }
    if let Some(hash) = s.consumed_send_hash {
        v["payment_hash"] = hash.to_string().into();
    }
    v
}

fn session_id(text: &str) -> Result<SessionId, ApiError> {
    text.parse().map_err(|_| GateError::SessionNotFound.into())
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let account = match serde_json::from_slice::<Value>(&body) {
        Ok(Value::Object(map)) => match map.get("account") {
            Some(Value::String(s)) => s.clone(),
            _ => {
                return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_request")
                    .with("reason", "missing account"))
            }
        },
        _ => {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_request")
                .with("reason", "body must be a JSON object"))
        }
    };
    let session = app.gate.create_session(&account, app.now()).await?;
    Ok((StatusCode::CREATED, Json(session_view(&session))).into_response())
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let session = app.gate.session_at(&session_id(&id)?, app.now()).await?;
    Ok(Json(session_view(&session)).into_response())
}

async fn verify_ownership(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let (session, _spec) = app
        .gate
        .verify_ownership(&session_id(&id)?, app.now())
        .await?;
    Ok(Json(session_view(&session)).into_response())
}

async fn verify_payment(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let (session, token) = app
        .gate
        .verify_payment(&session_id(&id)?, app.now())
        .await?;
    let mut body = session_view(&session);
    body["access_token"] = token.text.into();
    body["token_expires_at"] = token.payload.expires_at.into();
    Ok(Json(body).into_response())
}

#[derive(Deserialize)]
struct SearchQuery {
    q: Option<String>,
}

async fn protected_search(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(query): Query<SearchQuery>,
) -> ApiResult {
    let unauthorized = |reason: &str| {
        ApiError::new(StatusCode::UNAUTHORIZED, "invalid_token").with("reason", reason)
    };
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(|| unauthorized("missing"))?;
    let payload = app
        .gate
        .verify_token(token.trim(), app.now())
        .map_err(|e| unauthorized(e.code()))?;
    let q = query.q.ok_or_else(|| {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request").with("reason", "missing q")
    })?;
    let words: Vec<&str> = q.split_whitespace().collect();
    let mut distinct: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    distinct.sort();
    distinct.dedup();
    Ok(Json(json!({
        "query": q,
        "account": payload.account.to_string(),
        "result": {
            "characters": q.chars().count(),
            "words": words.len(),
            "distinct_words": distinct.len(),
        },
    }))
    .into_response())
}

async fn healthz(State(app): State<Arc<AppState>>) -> Response {
    Json(json!({
        "node_reachable": app.node_reachable().await,
        "requests_served": app.requests.load(Ordering::Relaxed),
    }))
    .into_response()
}

async fn count_requests(State(app): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    app.requests.fetch_add(1, Ordering::Relaxed);
    next.run(req).await
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed")
}

fn panic_response(_: Box<dyn std::any::Any + Send + 'static>) -> Response<Body> {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal").into_response()
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/ownership/verify", post(verify_ownership))
        .route("/v1/sessions/{id}/payment/verify", post(verify_payment))
        .route("/v1/protected/search", get(protected_search))
        .route("/healthz", get(healthz))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(middleware::from_fn_with_state(app.clone(), count_requests))
        .layer(tower_http::catch_panic::CatchPanicLayer::custom(
            panic_response,
        ))
        .with_state(app)
}
