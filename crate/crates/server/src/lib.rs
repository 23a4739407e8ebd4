//! HTTP/JSON bridge over a compiled net.
//!
//! Every request may carry an `x-atcg-session` header; requests with the
//! same value share one simulation session, and requests without it share
//! an anonymous one. The net itself is immutable and shared by all sessions.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use atcg_core::bridge::{ErrorDto, FireRequest, NetDto, StateDto, TestsDto, TreeDto, SESSION_HEADER};
use atcg_core::petri::{test_tree, Bounds, PrTNet};
use atcg_core::sim::{Choice, SimError, SimSession};
use atcg_core::testgen::{format_model_tests, scenarios};
use axum::extract::{Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tokio::net::TcpListener;
use tokio::sync::Mutex;

struct Shared {
    net: PrTNet,
    bounds: Bounds,
    sessions: Mutex<HashMap<String, SimSession>>,
}

type AppState = Arc<Shared>;

pub struct ApiError(StatusCode, ErrorDto);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> Self {
        ApiError(
            StatusCode::BAD_REQUEST,
            ErrorDto {
                code: e.code().to_string(),
                message: e.to_string(),
            },
        )
    }
}

fn session_key(headers: &HeaderMap) -> String {
    headers
        .get(SESSION_HEADER)
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default()
        .to_string()
}

async fn with_session<T>(state: &AppState, headers: &HeaderMap, f: impl FnOnce(&mut SimSession) -> T) -> T {
    let mut sessions = state.sessions.lock().await;
    let s = sessions
        .entry(session_key(headers))
        .or_insert_with(|| SimSession::new(state.net.clone()));
    f(s)
}

async fn get_net(State(state): State<AppState>) -> Json<NetDto> {
    Json(NetDto::from_net(&state.net))
}

async fn get_state(State(state): State<AppState>, headers: HeaderMap) -> Json<StateDto> {
    Json(with_session(&state, &headers, |s| StateDto::from_session(s)).await)
}

async fn step(state: &AppState, headers: &HeaderMap, choice: Choice) -> Result<Json<StateDto>, ApiError> {
    with_session(state, headers, |s| {
        s.step(choice)?;
        Ok(Json(StateDto::from_session(s)))
    })
    .await
}

async fn post_fire(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<FireRequest>,
) -> Result<Json<StateDto>, ApiError> {
    step(&state, &headers, Choice::Index(req.index)).await
}

async fn post_reset(State(state): State<AppState>, headers: HeaderMap) -> Result<Json<StateDto>, ApiError> {
    step(&state, &headers, Choice::Reset).await
}

async fn post_undo(State(state): State<AppState>, headers: HeaderMap) -> Result<Json<StateDto>, ApiError> {
    step(&state, &headers, Choice::Undo).await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct TreeQuery {
    max_depth: Option<usize>,
}

async fn get_tree(State(state): State<AppState>, Query(q): Query<TreeQuery>) -> Json<TreeDto> {
    let bounds = Bounds {
        max_depth: q.max_depth.unwrap_or(state.bounds.max_depth),
        ..state.bounds
    };
    let net = state.net.clone();
    Json(TreeDto::from_tree(&test_tree(&net, &bounds), &net))
}

#[derive(Deserialize)]
struct TestsQuery {
    all: Option<bool>,
}

async fn get_tests(State(state): State<AppState>, Query(q): Query<TestsQuery>) -> Json<TestsDto> {
    let tree = test_tree(&state.net, &state.bounds);
    let suite = scenarios(&tree, &state.net);
    Json(TestsDto {
        text: format_model_tests(&suite, !q.all.unwrap_or(false)),
    })
}

pub fn router(net: PrTNet, bounds: Bounds) -> Router {
    let state = Arc::new(Shared {
        net,
        bounds,
        sessions: Mutex::new(HashMap::new()),
    });
    Router::new()
        .route("/net", get(get_net))
        .route("/state", get(get_state))
        .route("/fire", post(post_fire))
        .route("/reset", post(post_reset))
        .route("/undo", post(post_undo))
        .route("/tree", get(get_tree))
        .route("/tests", get(get_tests))
        .with_state(state)
}

/// Binds on localhost; port 0 picks a free port.
pub async fn bind(port: u16) -> std::io::Result<TcpListener> {
    TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], port))).await
}

pub async fn serve(listener: TcpListener, net: PrTNet, bounds: Bounds) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr()?, net = %net.id, "serving");
    axum::serve(listener, router(net, bounds)).await
}
