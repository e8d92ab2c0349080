//! HTTP/JSON front end over the recovery stages.
//!
//! Every stage endpoint answers `200` with a [`StageResponse`], or an
//! [`ErrorBody`] with `400` for input errors and `422` when the analysis
//! itself fails. `/v1/pipeline` answers `200` whenever a manifest was
//! written; the report then carries the failure, if any.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rosarch_core::api::{self, *};
use rosarch_core::eval::EvaluationReport;
use rosarch_core::extract::NodeInventory;
use rosarch_core::launch::LaunchDependencyDescription;
use rosarch_core::llm::LlmConfig;
use rosarch_core::names::{apply_remappings, resolve_name};
use rosarch_core::pipeline::{self, PipelineReport, RecoveryJobConfig, SynthesisOutput};
use rosarch_core::{Diagnostics, Error, ErrorClass};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

#[derive(Debug, Clone, Default)]
pub struct AppState {
    pub llm: LlmConfig,
}

impl AppState {
    /// Reads the LLM endpoint and timeout from the environment.
    pub fn from_env() -> Self {
        AppState { llm: LlmConfig::from_env() }
    }
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(error: &Error, diags: Diagnostics) -> Self {
        let status = match error.class() {
            ErrorClass::Input => StatusCode::BAD_REQUEST,
            ErrorClass::Analysis => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError {
            status,
            body: ErrorBody::from_error(error, diags.iter().cloned().collect()),
        }
    }

    fn internal(message: String) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ErrorBody {
                class: ErrorClass::Analysis,
                message,
                diagnostics: Vec::new(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Reply<T> = Result<Json<StageResponse<T>>, ApiError>;

/// Runs a synchronous stage off the async executor.
async fn blocking<T, F>(work: F) -> Reply<T>
where
    T: Send + 'static,
    F: FnOnce(&mut Diagnostics) -> rosarch_core::Result<T> + Send + 'static,
{
    let joined = tokio::task::spawn_blocking(move || {
        let mut diags = Diagnostics::new();
        let result = work(&mut diags);
        (result, diags)
    })
    .await
    .map_err(|e| ApiError::internal(format!("stage task failed: {e}")))?;
    match joined {
        (Ok(result), diags) => Ok(Json(StageResponse {
            result,
            diagnostics: diags.iter().cloned().collect(),
        })),
        (Err(e), diags) => Err(ApiError::new(&e, diags)),
    }
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn extract(Json(req): Json<ExtractRequest>) -> Reply<NodeInventory> {
    blocking(move |d| pipeline::run_extract(&req.repo, &req.out, d)).await
}

async fn launch_graph(Json(req): Json<LaunchGraphRequest>) -> Reply<LaunchDependencyDescription> {
    blocking(move |d| pipeline::run_launch_graph(&req.repo, &req.out, &req.roots, d)).await
}

async fn synthesize(Json(req): Json<SynthesizeRequest>) -> Reply<SynthesisOutput> {
    blocking(move |d| pipeline::run_synthesize(&req.out, req.dump_relations, d)).await
}

async fn evaluate(Json(req): Json<EvaluateRequest>) -> Reply<EvaluationReport> {
    blocking(move |d| pipeline::run_evaluate(&req.recovered, &req.reference, d)).await
}

async fn prompt(Json(req): Json<PromptRequest>) -> Reply<PromptResponse> {
    blocking(move |_| pipeline::run_prompt(&req.out, &req.template).map(|prompt| PromptResponse { prompt })).await
}

async fn resolve(Json(req): Json<ResolveNameRequest>) -> Reply<ResolveNameResponse> {
    let mut diags = Diagnostics::new();
    let resolved = resolve_name(&req.name, &req.namespace, &req.node_name)
        .map_err(|e| ApiError::new(&Error::Input(e.to_string()), Diagnostics::new()))?;
    let remapped = apply_remappings(&resolved, &req.remappings, &req.name, &mut diags);
    Ok(Json(StageResponse {
        result: ResolveNameResponse {
            resolved: resolved.absolute,
            remapped: remapped.absolute,
        },
        diagnostics: diags.iter().cloned().collect(),
    }))
}

async fn run(State(state): State<Arc<AppState>>, Json(config): Json<RecoveryJobConfig>) -> Result<Json<PipelineReport>, ApiError> {
    pipeline::run_pipeline(&config, &state.llm)
        .await
        .map(Json)
        .map_err(|e| ApiError::new(&e, Diagnostics::new()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route(api::HEALTH, get(health))
        .route(api::EXTRACT, post(extract))
        .route(api::LAUNCH_GRAPH, post(launch_graph))
        .route(api::SYNTHESIZE, post(synthesize))
        .route(api::EVALUATE, post(evaluate))
        .route(api::PIPELINE, post(run))
        .route(api::RESOLVE_NAME, post(resolve))
        .route(api::PROMPT, post(prompt))
        .with_state(Arc::new(state))
}

pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Binds `addr` (port 0 picks a free one) and serves in the background.
pub async fn spawn(addr: SocketAddr, state: AppState) -> std::io::Result<(SocketAddr, JoinHandle<std::io::Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let bound = listener.local_addr()?;
    tracing::info!(%bound, "rosarch service listening");
    Ok((bound, tokio::spawn(serve(listener, state))))
}
