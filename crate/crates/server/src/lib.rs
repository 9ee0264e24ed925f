//! HTTP JSON interface for the cascade toolkit.
//!
//! Every compute endpoint is a thin transport over the matching library
//! call. The service binds to loopback by default and has no
//! authentication; it is meant for a single local user.

mod api;
mod error;

use std::future::Future;
use std::io;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cascade_core::aggregate::extremize;
use cascade_core::cascade::{
    apply_overrides, evaluate_cascade, CascadeModel, EvaluationReport, Overrides,
};
use cascade_core::grid::{build_joint_grid, JointGrid};
use cascade_core::hazard::{rescale, HorizonRisk};
use cascade_core::sensitivity::{
    certainty_sweeps, solve_uniform_multiplier, tornado, TornadoEntry,
};
use cascade_store::{ModelDocument, ModelSummary, ScenarioDocument, ScenarioDraft, Store};
use serde::de::DeserializeOwned;
use tokio::net::TcpListener;

pub use api::*;
pub use error::{ApiError, ErrorCode};

pub const DEFAULT_PORT: u16 = 8787;

type Shared = Arc<Store>;
type ApiResult<T> = Result<Json<T>, ApiError>;

/// JSON body whose rejections come back as structured bad-request errors.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(rejection) => Err(rejection_error(rejection)),
        }
    }
}

fn rejection_error(r: JsonRejection) -> ApiError {
    ApiError::bad_request(r.body_text())
}

/// Runs store-touching work off the async workers.
async fn blocking<T, F>(store: Shared, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Store) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .unwrap_or_else(|e| {
            Err(ApiError::new(
                ErrorCode::Storage,
                format!("worker failed: {e}"),
            ))
        })
}

fn overridden(doc: &ModelDocument, overrides: &Overrides) -> Result<CascadeModel, ApiError> {
    Ok(apply_overrides(&doc.model, overrides)?)
}

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/api/models", get(list_models))
        .route("/api/models/{id}", get(get_model))
        .route("/api/evaluate", post(evaluate))
        .route("/api/solve", post(solve))
        .route("/api/tornado", post(tornado_handler))
        .route("/api/grids/evaluate", post(grid))
        .route("/api/hazard/rescale", post(hazard_rescale))
        .route("/api/aggregate/extremize", post(aggregate_extremize))
        .route("/api/scenarios", get(list_scenarios).post(save_scenario))
        .route("/api/scenarios/{id}", get(get_scenario))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(Arc::new(store))
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    store: Store,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn list_models(State(s): State<Shared>) -> ApiResult<Vec<ModelSummary>> {
    blocking(s, |store| Ok(store.list_models()?))
        .await
        .map(Json)
}

async fn get_model(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<ModelDocument> {
    blocking(s, move |store| Ok(store.model(&id)?))
        .await
        .map(Json)
}

async fn evaluate(
    State(s): State<Shared>,
    ApiJson(req): ApiJson<EvaluateRequest>,
) -> ApiResult<EvaluationReport> {
    blocking(s, move |store| {
        let doc = store.model(&req.model_id)?;
        Ok(evaluate_cascade(&overridden(&doc, &req.overrides)?)?)
    })
    .await
    .map(Json)
}

async fn solve(
    State(s): State<Shared>,
    ApiJson(req): ApiJson<SolveRequest>,
) -> ApiResult<SolveResponse> {
    blocking(s, move |store| {
        let doc = store.model(&req.model_id)?;
        let subset = match req.subset {
            SubsetRef::Inline(s) => s,
            SubsetRef::Named(name) => doc.resolve_subset(&name).map_err(ApiError::bad_request)?,
        };
        let model = overridden(&doc, &req.overrides)?;
        let sol = solve_uniform_multiplier(&model, req.target, &subset)?;
        Ok(SolveResponse {
            multiplier: sol.multiplier,
            factors: sol.model.factors,
            achieved: sol.achieved,
        })
    })
    .await
    .map(Json)
}

async fn tornado_handler(
    State(s): State<Shared>,
    ApiJson(req): ApiJson<TornadoRequest>,
) -> ApiResult<Vec<TornadoEntry>> {
    blocking(s, move |store| {
        let doc = store.model(&req.model_id)?;
        let model = overridden(&doc, &req.overrides)?;
        let sweeps = req.sweeps.unwrap_or_else(|| certainty_sweeps(&model));
        Ok(tornado(&model, &sweeps)?)
    })
    .await
    .map(Json)
}

async fn grid(State(s): State<Shared>, ApiJson(req): ApiJson<GridRequest>) -> ApiResult<JointGrid> {
    blocking(s, move |store| {
        let (rows, cols, rule) = match &req.model_id {
            Some(id) => {
                let doc = store.model(id)?;
                let spec = match &req.grid {
                    Some(name) => doc.grid(name),
                    None => doc.grids.first(),
                }
                .ok_or_else(|| {
                    ApiError::not_found(format!(
                        "model '{id}' has no grid{}",
                        req.grid
                            .as_deref()
                            .map(|n| format!(" '{n}'"))
                            .unwrap_or_default()
                    ))
                })?;
                let axis = |name: &str| {
                    doc.distribution(name).cloned().ok_or_else(|| {
                        ApiError::new(ErrorCode::Storage, format!("missing distribution '{name}'"))
                    })
                };
                let rows = match req.rows {
                    Some(r) => r,
                    None => axis(&spec.rows)?,
                };
                let cols = match req.cols {
                    Some(c) => c,
                    None => axis(&spec.cols)?,
                };
                (rows, cols, req.rule.unwrap_or(spec.rule))
            }
            None => match (req.rows, req.cols, req.rule) {
                (Some(r), Some(c), Some(rule)) => (r, c, rule),
                _ => {
                    return Err(ApiError::bad_request(
                        "give either model_id or all of rows, cols and rule",
                    ))
                }
            },
        };
        Ok(build_joint_grid(&rows, &cols, rule)?)
    })
    .await
    .map(Json)
}

async fn hazard_rescale(ApiJson(req): ApiJson<RescaleRequest>) -> ApiResult<HorizonRisk> {
    let risk = HorizonRisk::new(req.probability, req.horizon_years)?;
    Ok(Json(rescale(risk, req.target_years)?))
}

async fn aggregate_extremize(
    ApiJson(req): ApiJson<ExtremizeRequest>,
) -> ApiResult<ProbabilityResponse> {
    Ok(Json(ProbabilityResponse {
        probability: extremize(req.probability, req.exponent)?,
    }))
}

async fn list_scenarios(State(s): State<Shared>) -> ApiResult<Vec<ScenarioDocument>> {
    blocking(s, |store| Ok(store.list_scenarios()?))
        .await
        .map(Json)
}

async fn get_scenario(
    State(s): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<ScenarioDocument> {
    blocking(s, move |store| Ok(store.scenario(&id)?))
        .await
        .map(Json)
}

async fn save_scenario(
    State(s): State<Shared>,
    ApiJson(draft): ApiJson<ScenarioDraft>,
) -> Result<Response, ApiError> {
    let doc = blocking(s, move |store| Ok(store.save_scenario(draft)?)).await?;
    Ok((StatusCode::CREATED, Json(doc)).into_response())
}
