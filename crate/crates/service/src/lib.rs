//! HTTP and WebSocket control service for a live simulation.
//!
//! One engine runs per service, on its own thread, starting paused at tick 0.
//!
//! | route | |
//! |---|---|
//! | `GET /api/state` | engine snapshot plus `fault` |
//! | `POST /api/control` | `{"action": "pause"\|"resume"\|"reset"\|"speed"\|"stop", "value"?}` |
//! | `PATCH /api/attacks/{link_id}` | partial attack spec for `s2c`, `c2b`, `b2c-status` or `grid` |
//! | `GET /api/scenario` | effective scenario |
//! | `GET /api/report` | rolling stability report over the last `report_window_s` |
//! | `GET /ws/telemetry?decimation=N` | one JSON frame per N ticks |

pub mod engine;
pub mod telemetry;

use std::net::SocketAddr;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use bess_sim::engine::{Ack, AttackTarget, EngineCommand};
use bess_sim::scenario::ScenarioConfig;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;

pub use engine::{EngineGone, EngineHandle, ReportView, StateView};
pub use telemetry::{Frame, Subscriber, TelemetryFrame};

#[derive(Debug, Clone, Copy)]
pub struct ServiceConfig {
    /// Frames buffered per subscriber before it starts skipping.
    pub frame_buffer: usize,
    /// Length of the rolling report window, seconds.
    pub report_window_s: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            frame_buffer: 1024,
            report_window_s: 300.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Sim(#[from] bess_sim::Error),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A bound but not yet serving service.
pub struct Server {
    listener: TcpListener,
    handle: EngineHandle,
}

impl Server {
    pub async fn bind(config: ScenarioConfig, addr: SocketAddr, opts: ServiceConfig) -> Result<Self, ServiceError> {
        let handle = EngineHandle::spawn(config, opts)?;
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|source| ServiceError::Bind { addr, source })?;
        Ok(Server { listener, handle })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn handle(&self) -> EngineHandle {
        self.handle.clone()
    }

    pub async fn run(self) -> Result<(), ServiceError> {
        axum::serve(self.listener, router(self.handle)).await?;
        Ok(())
    }
}

pub fn router(handle: EngineHandle) -> Router {
    Router::new()
        .route("/api/state", get(get_state))
        .route("/api/control", post(post_control))
        .route("/api/attacks/{link_id}", patch(patch_attack))
        .route("/api/scenario", get(get_scenario))
        .route("/api/report", get(get_report))
        .route("/ws/telemetry", get(ws_telemetry))
        .with_state(handle)
}

/// Error body: `{"error": message, "field": path-or-null}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            field: None,
        }
    }
}

impl From<bess_sim::Error> for ApiError {
    fn from(e: bess_sim::Error) -> Self {
        use bess_sim::Error as E;
        let (status, field) = match &e {
            E::Invalid { field, .. } => (StatusCode::UNPROCESSABLE_ENTITY, Some(field.clone())),
            E::BadPath(path) => (StatusCode::UNPROCESSABLE_ENTITY, Some(path.clone())),
            E::Stopped => (StatusCode::CONFLICT, None),
            e if e.is_validation() => (StatusCode::UNPROCESSABLE_ENTITY, None),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, None),
        };
        ApiError {
            status,
            message: e.to_string(),
            field,
        }
    }
}

impl From<EngineGone> for ApiError {
    fn from(_: EngineGone) -> Self {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "engine thread has exited")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message, "field": self.field}))).into_response()
    }
}

async fn get_state(State(h): State<EngineHandle>) -> Result<Json<StateView>, ApiError> {
    Ok(Json(h.state().await?))
}

async fn get_scenario(State(h): State<EngineHandle>) -> Result<Json<ScenarioConfig>, ApiError> {
    Ok(Json(h.scenario().await?))
}

async fn get_report(State(h): State<EngineHandle>) -> Result<Json<ReportView>, ApiError> {
    Ok(Json(h.report().await?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlRequest {
    pub action: String,
    #[serde(default)]
    pub value: Option<f64>,
}

async fn post_control(State(h): State<EngineHandle>, Json(req): Json<ControlRequest>) -> Result<Json<Ack>, ApiError> {
    let cmd = match req.action.as_str() {
        "pause" => EngineCommand::Pause,
        "resume" => EngineCommand::Resume,
        "reset" => EngineCommand::Reset,
        "stop" => EngineCommand::Stop,
        "speed" => match req.value {
            Some(v) => EngineCommand::SetSpeed(v),
            None => return Err(bess_sim::Error::invalid("value", "speed needs a value").into()),
        },
        other => return Err(bess_sim::Error::invalid("action", format!("unknown action `{other}`")).into()),
    };
    Ok(Json(h.command(cmd).await??))
}

async fn patch_attack(
    State(h): State<EngineHandle>,
    Path(link_id): Path<String>,
    Json(patch): Json<Value>,
) -> Result<Json<Ack>, ApiError> {
    let target: AttackTarget = link_id
        .parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("unknown link `{link_id}`")))?;
    Ok(Json(h.command(EngineCommand::PatchAttack { target, patch }).await??))
}

#[derive(Debug, Deserialize)]
struct WsParams {
    decimation: Option<u64>,
}

async fn ws_telemetry(
    State(h): State<EngineHandle>,
    Query(params): Query<WsParams>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let decimation = params.decimation.unwrap_or(1);
    if decimation == 0 {
        let mut e = ApiError::new(StatusCode::BAD_REQUEST, "decimation must be at least 1");
        e.field = Some("decimation".into());
        return Err(e);
    }
    let sub = Subscriber::new(h.subscribe(), decimation);
    Ok(ws.on_upgrade(move |socket| stream_frames(socket, sub)))
}

async fn stream_frames(mut socket: WebSocket, mut sub: Subscriber) {
    loop {
        tokio::select! {
            next = sub.next() => {
                let Some((frame, gap)) = next else { break };
                if socket.send(Message::Text(frame.to_json(gap).into())).await.is_err() {
                    break;
                }
            }
            msg = socket.recv() => match msg {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}
