//! HTTP schedule-request service.
//!
//! `POST /schedule?scheduler=gnn|heuristic|optimal` with an instance JSON
//! body. 200 carries the schedule, 400 a parse or request error, 422 a
//! scheduling failure, 503 a GNN request on a server started without
//! weights.

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use carrier_sched::{
    emit_schedule, parse_instance, schedule_with_gnn, solve_heuristic, solve_optimal, GnnModel,
    InferencePolicy, ProblemInstance, Schedule, ScheduleError, SolverBudget,
};
use serde::{Deserialize, Serialize};

/// Shared, immutable for the lifetime of the server.
#[derive(Debug, Default)]
pub struct ServiceState {
    pub model: Option<Arc<GnnModel>>,
    pub policy: InferencePolicy,
    pub budget: SolverBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerKind {
    Gnn,
    Heuristic,
    Optimal,
}

#[derive(Debug, Deserialize)]
pub struct ScheduleQuery {
    scheduler: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

fn error(status: StatusCode, kind: &str, message: impl Into<String>) -> Response {
    let body = ErrorBody {
        error: kind.to_string(),
        message: message.into(),
    };
    (status, Json(body)).into_response()
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/schedule", post(schedule))
        .route("/health", get(|| async { "ok" }))
        .with_state(state)
}

fn run(state: &ServiceState, kind: SchedulerKind, instance: &ProblemInstance) -> Result<Schedule, ScheduleError> {
    match kind {
        SchedulerKind::Heuristic => solve_heuristic(instance),
        SchedulerKind::Optimal => solve_optimal(instance, &state.budget),
        SchedulerKind::Gnn => {
            let model = state.model.as_ref().expect("checked before dispatch");
            schedule_with_gnn(model, instance, &state.policy)
        }
    }
}

async fn schedule(
    State(state): State<Arc<ServiceState>>,
    Query(query): Query<ScheduleQuery>,
    body: String,
) -> Response {
    let kind = match query.scheduler.as_deref() {
        Some("gnn") => SchedulerKind::Gnn,
        Some("heuristic") => SchedulerKind::Heuristic,
        Some("optimal") => SchedulerKind::Optimal,
        Some(other) => {
            return error(
                StatusCode::BAD_REQUEST,
                "bad_request",
                format!("unknown scheduler `{other}`, expected gnn, heuristic or optimal"),
            )
        }
        None => return error(StatusCode::BAD_REQUEST, "bad_request", "missing query parameter `scheduler`"),
    };
    let instance = match parse_instance(&body) {
        Ok(i) => i,
        Err(e) => return error(StatusCode::BAD_REQUEST, "parse", e.to_string()),
    };
    if kind == SchedulerKind::Gnn && state.model.is_none() {
        return error(StatusCode::SERVICE_UNAVAILABLE, "no_model", "server started without GNN weights");
    }
    let worker_state = state.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let result = run(&worker_state, kind, &instance);
        result.map(|s| emit_schedule(&instance, &s))
    })
    .await;
    match outcome {
        Ok(Ok(json)) => (StatusCode::OK, [("content-type", "application/json")], json).into_response(),
        Ok(Err(e)) => error(StatusCode::UNPROCESSABLE_ENTITY, e.kind(), e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
    }
}
