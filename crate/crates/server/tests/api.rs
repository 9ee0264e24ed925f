use std::fs;
use std::path::Path;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use cascade_core::aggregate::extremize;
use cascade_core::cascade::{apply_overrides, evaluate_cascade, FactorValue, Overrides};
use cascade_core::grid::build_joint_grid;
use cascade_core::hazard::{rescale, HorizonRisk};
use cascade_core::sensitivity::{
    certainty_sweeps, solve_uniform_multiplier, tornado, FactorSubset,
};
use cascade_core::Probability;
use cascade_server::{router, ApiError, ErrorCode};
use cascade_store::Store;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

const JOINT_2043: f64 = 0.003_996_179_712;

fn app() -> (Router, TempDir) {
    let tmp = TempDir::new().unwrap();
    (router(Store::open(tmp.path()).unwrap()), tmp)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body)).await
}

fn api_error(status: StatusCode, body: Value) -> ApiError {
    let err: ApiError = serde_json::from_value(body).unwrap();
    assert_eq!(err.code.status(), status);
    assert!(!err.message.is_empty());
    err
}

fn model_2043() -> cascade_core::CascadeModel {
    Store::bundled_only().model("tagi-2043").unwrap().model
}

#[tokio::test]
async fn models() {
    let (app, _tmp) = app();
    let (status, body) = call(&app, Method::GET, "/api/models", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = body
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"tagi-2043") && ids.contains(&"tagi-2100"));

    let (status, body) = call(&app, Method::GET, "/api/models/tagi-2043", None).await;
    assert_eq!(status, StatusCode::OK);
    let values: Vec<f64> = body["model"]["factors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["probability"].as_f64().unwrap())
        .collect();
    assert_eq!(
        values,
        [0.60, 0.40, 0.16, 0.60, 0.46, 0.70, 0.90, 0.70, 0.90, 0.95]
    );

    let (status, body) = call(&app, Method::GET, "/api/models/nope", None).await;
    assert_eq!(api_error(status, body).code, ErrorCode::NotFound);
}

#[tokio::test]
async fn evaluate_matches_library() {
    let (app, _tmp) = app();
    let (status, body) = post(
        &app,
        "/api/evaluate",
        json!({"model_id": "tagi-2043", "overrides": {}}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body,
        serde_json::to_value(evaluate_cascade(&model_2043()).unwrap()).unwrap()
    );
    assert!((body["joint_odds"].as_f64().unwrap() - JOINT_2043).abs() < 1e-15);

    let (_, body) = post(
        &app,
        "/api/evaluate",
        json!({"model_id": "tagi-2043", "overrides": {"war": 1.0}}),
    )
    .await;
    let joint = body["joint_odds"].as_f64().unwrap();
    assert!((joint - JOINT_2043 / 0.70).abs() < 1e-15);
    assert!((joint - 0.005_709).abs() < 5e-7);

    let (_, body) = post(
        &app,
        "/api/evaluate",
        json!({"model_id": "tagi-2043", "overrides": {"robots": "N/A"}}),
    )
    .await;
    let mut o = Overrides::new();
    o.insert("robots".into(), FactorValue::NotApplicable);
    let expected = evaluate_cascade(&apply_overrides(&model_2043(), &o).unwrap()).unwrap();
    assert_eq!(body, serde_json::to_value(expected).unwrap());

    let (status, body) = post(
        &app,
        "/api/evaluate",
        json!({"model_id": "tagi-2043", "overrides": {"bogus": 0.5}}),
    )
    .await;
    let err = api_error(status, body);
    assert_eq!(err.code, ErrorCode::BadRequest);
    assert!(err.message.contains("bogus"));

    let (status, body) = post(
        &app,
        "/api/evaluate",
        json!({"model_id": "tagi-2043", "overrides": {"war": 1.3}}),
    )
    .await;
    assert_eq!(api_error(status, body).code, ErrorCode::BadRequest);

    let (status, body) = post(&app, "/api/evaluate", json!({"model_id": "nope"})).await;
    assert_eq!(api_error(status, body).code, ErrorCode::NotFound);
}

#[tokio::test]
async fn malformed_bodies_are_structured() {
    let (app, _tmp) = app();
    let req = Request::builder()
        .method(Method::POST)
        .uri("/api/evaluate")
        .header("content-type", "application/json")
        .body(Body::from("{ not json"))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(
        api_error(status, serde_json::from_slice(&bytes).unwrap()).code,
        ErrorCode::BadRequest
    );

    let (status, body) = post(
        &app,
        "/api/evaluate",
        json!({"model_id": "tagi-2043", "typo": 1}),
    )
    .await;
    assert_eq!(api_error(status, body).code, ErrorCode::BadRequest);

    let (status, body) = call(&app, Method::GET, "/api/nothing-here", None).await;
    assert_eq!(api_error(status, body).code, ErrorCode::NotFound);
}

#[tokio::test]
async fn solve_matches_library() {
    let (app, _tmp) = app();
    let (status, body) = post(
        &app,
        "/api/solve",
        json!({"model_id": "tagi-2043", "target": JOINT_2043, "subset": "all"}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["multiplier"].as_f64(), Some(1.0));

    let (_, body) = post(
        &app,
        "/api/solve",
        json!({"model_id": "tagi-2043", "target": 0.10, "subset": "all"}),
    )
    .await;
    let sol = solve_uniform_multiplier(
        &model_2043(),
        Probability::new(0.10).unwrap(),
        &FactorSubset::All,
    )
    .unwrap();
    assert_eq!(body["multiplier"].as_f64(), Some(sol.multiplier));
    assert_eq!(
        body["factors"],
        serde_json::to_value(&sol.model.factors).unwrap()
    );
    // forward check: the returned factors multiply back to the target
    let product: f64 = body["factors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["probability"].as_f64().unwrap())
        .product();
    assert!((product - 0.10).abs() < 1e-6);
    assert!((body["achieved"].as_f64().unwrap() - 0.10).abs() < 1e-6);

    // rows 1-7, the factors before the derailment block
    let (status, body) = post(
        &app,
        "/api/solve",
        json!({"model_id": "tagi-2043", "target": 0.99, "subset": "pre-derailment"}),
    )
    .await;
    let err = api_error(status, body);
    assert_eq!(err.code, ErrorCode::Infeasible);
    let max = err.detail.unwrap()["max_achievable"].as_f64().unwrap();
    assert!((max - 0.70 * 0.90 * 0.95).abs() < 1e-15);
    assert!((max - 0.5985).abs() < 1e-12);

    let (status, body) = post(
        &app,
        "/api/solve",
        json!({"model_id": "tagi-2043", "target": 0.5, "subset": {"group": "sociopolitical"}}),
    )
    .await;
    let err = api_error(status, body);
    assert_eq!(err.code, ErrorCode::Infeasible);
    let max = err.detail.unwrap()["max_achievable"].as_f64().unwrap();
    assert!((max - 0.60 * 0.40 * 0.16 * 0.60 * 0.46).abs() < 1e-15);

    let (status, body) = post(
        &app,
        "/api/solve",
        json!({"model_id": "tagi-2043", "target": 0.5, "subset": "no-such-subset"}),
    )
    .await;
    assert_eq!(api_error(status, body).code, ErrorCode::BadRequest);
}

#[tokio::test]
async fn tornado_matches_library() {
    let (app, _tmp) = app();
    let sweeps = json!([{"factor_id": "inference-cost", "low": 0.05, "high": 0.5}, {"factor_id": "war", "low": 0.5, "high": 0.9}]);
    let (status, body) = post(
        &app,
        "/api/tornado",
        json!({"model_id": "tagi-2043", "sweeps": sweeps.clone()}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let expected = tornado(
        &model_2043(),
        &serde_json::from_value::<Vec<_>>(sweeps).unwrap(),
    )
    .unwrap();
    assert_eq!(body, serde_json::to_value(expected).unwrap());

    let (_, body) = post(&app, "/api/tornado", json!({"model_id": "tagi-2043"})).await;
    let m = model_2043();
    assert_eq!(
        body,
        serde_json::to_value(tornado(&m, &certainty_sweeps(&m)).unwrap()).unwrap()
    );

    let (status, body) = post(
        &app,
        "/api/tornado",
        json!({"model_id": "tagi-2043", "sweeps": [{"factor_id": "war", "low": 0.9, "high": 0.1}]}),
    )
    .await;
    assert_eq!(api_error(status, body).code, ErrorCode::BadRequest);
}

#[tokio::test]
async fn grid_matches_library() {
    let (app, _tmp) = app();
    let (status, body) = post(
        &app,
        "/api/grids/evaluate",
        json!({"model_id": "tagi-2043"}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!((body["qualifying_mass"].as_f64().unwrap() - 0.156).abs() < 1e-9);

    let doc = Store::bundled_only().model("tagi-2043").unwrap();
    let rows = doc.distribution("brain-flops").unwrap();
    let cols = doc.distribution("flops-per-dollar-hour").unwrap();
    let spec = doc.grid("inference-cost").unwrap();
    assert_eq!(
        body,
        serde_json::to_value(build_joint_grid(rows, cols, spec.rule).unwrap()).unwrap()
    );

    let (_, body) = post(
        &app,
        "/api/grids/evaluate",
        json!({"model_id": "tagi-2043", "rule": {"threshold": 25.0, "strict": false}}),
    )
    .await;
    assert!((body["qualifying_mass"].as_f64().unwrap() - 0.256).abs() < 1e-9);

    // free-standing: all column weight on the most efficient bucket
    let mut tail = serde_json::to_value(cols).unwrap();
    tail["weights"] = json!([0.0, 0.0, 0.0, 0.0, 1.0]);
    let inline = json!({"rows": rows, "cols": tail, "rule": {"threshold": 25.0, "strict": true}});
    let (status, body) = post(&app, "/api/grids/evaluate", inline).await;
    assert_eq!(status, StatusCode::OK);
    // rows up to 1e19 cost under $25/hr at 4e18; 1e20 lands exactly on it
    assert!((body["qualifying_mass"].as_f64().unwrap() - 0.4).abs() < 1e-12);

    let (_, body) = post(
        &app,
        "/api/grids/evaluate",
        json!({"model_id": "tagi-2043", "rule": {"threshold": 0.0}}),
    )
    .await;
    assert_eq!(body["qualifying_mass"].as_f64(), Some(0.0));

    let mut bad = serde_json::to_value(cols).unwrap();
    bad["weights"] = json!([0.5, 0.5, 0.5, 0.0, 0.0]);
    let (status, body) = post(
        &app,
        "/api/grids/evaluate",
        json!({"model_id": "tagi-2043", "cols": bad}),
    )
    .await;
    assert_eq!(api_error(status, body).code, ErrorCode::BadRequest);

    let (status, body) = post(&app, "/api/grids/evaluate", json!({"rows": rows})).await;
    assert_eq!(api_error(status, body).code, ErrorCode::BadRequest);
}

#[tokio::test]
async fn hazard_and_aggregate_match_library() {
    let (app, _tmp) = app();
    let (status, body) = post(
        &app,
        "/api/hazard/rescale",
        json!({"probability": 0.14, "horizon_years": 5, "target_years": 15}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let expected = rescale(
        HorizonRisk::new(Probability::new(0.14).unwrap(), 5.0).unwrap(),
        15.0,
    )
    .unwrap();
    assert_eq!(body, serde_json::to_value(expected).unwrap());
    // independent: 1 - 0.86^3
    assert!((body["probability"].as_f64().unwrap() - (1.0 - 0.86f64.powi(3))).abs() < 1e-15);
    assert!((body["probability"].as_f64().unwrap() - 0.3644).abs() < 5e-4);

    let (status, body) = post(
        &app,
        "/api/hazard/rescale",
        json!({"probability": 0.14, "horizon_years": 0, "target_years": 15}),
    )
    .await;
    assert_eq!(api_error(status, body).code, ErrorCode::BadRequest);

    let (_, body) = post(
        &app,
        "/api/aggregate/extremize",
        json!({"probability": 0.5, "exponent": 3.0}),
    )
    .await;
    assert_eq!(body["probability"].as_f64(), Some(0.5));
    let (_, body) = post(
        &app,
        "/api/aggregate/extremize",
        json!({"probability": 0.3, "exponent": 2.0}),
    )
    .await;
    let expected = extremize(Probability::new(0.3).unwrap(), 2.0).unwrap();
    assert_eq!(body["probability"].as_f64(), Some(expected.value()));

    let (status, body) = post(
        &app,
        "/api/aggregate/extremize",
        json!({"probability": 0.3, "exponent": -1.0}),
    )
    .await;
    assert_eq!(api_error(status, body).code, ErrorCode::BadRequest);
}

#[tokio::test]
async fn scenarios_round_trip() {
    let (app, _tmp) = app();
    let (status, body) = call(&app, Method::GET, "/api/scenarios", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));

    let draft =
        json!({"base_model": "tagi-2043", "overrides": {"robots": 1.0}, "note": "certain robots"});
    let (status, saved) = post(&app, "/api/scenarios", draft.clone()).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = saved["id"].as_str().unwrap().to_string();

    let (_, list) = call(&app, Method::GET, "/api/scenarios", None).await;
    assert_eq!(list, json!([saved.clone()]));
    let (_, one) = call(&app, Method::GET, &format!("/api/scenarios/{id}"), None).await;
    assert_eq!(one, saved);

    let (_, body) = post(
        &app,
        "/api/evaluate",
        json!({"model_id": saved["base_model"], "overrides": saved["overrides"]}),
    )
    .await;
    let joint = body["joint_odds"].as_f64().unwrap();
    assert!((joint - JOINT_2043 / 0.60).abs() < 1e-15);
    assert_eq!(cascade_core::display::percent(joint), "0.7%");

    let (status, body) = post(&app, "/api/scenarios", draft).await;
    let err = api_error(status, body);
    assert_eq!(err.code, ErrorCode::Conflict);
    assert_eq!(err.detail.unwrap()["id"], json!(id));

    let (status, body) = post(&app, "/api/scenarios", json!({"base_model": "nope"})).await;
    assert_eq!(api_error(status, body).code, ErrorCode::NotFound);
    let (status, body) = call(&app, Method::GET, "/api/scenarios/0123456789ab", None).await;
    assert_eq!(api_error(status, body).code, ErrorCode::NotFound);
}

#[tokio::test]
async fn read_only_store_reports_storage() {
    let app = router(Store::bundled_only());
    let (status, body) = post(&app, "/api/scenarios", json!({"base_model": "tagi-2043"})).await;
    assert_eq!(api_error(status, body).code, ErrorCode::Storage);
}

#[tokio::test]
async fn concurrent_identical_saves() {
    let (app, tmp) = app();
    let draft = json!({"base_model": "tagi-2043", "overrides": {"war": 1.0}});
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let app = app.clone();
            let draft = draft.clone();
            tokio::spawn(async move { post(&app, "/api/scenarios", draft).await.0 })
        })
        .collect();
    let mut statuses = Vec::new();
    for t in tasks {
        statuses.push(t.await.unwrap());
    }
    assert_eq!(
        statuses
            .iter()
            .filter(|s| **s == StatusCode::CREATED)
            .count(),
        1
    );
    assert_eq!(
        statuses
            .iter()
            .filter(|s| **s == StatusCode::CONFLICT)
            .count(),
        15
    );
    assert_eq!(
        fs::read_dir(tmp.path().join("scenarios")).unwrap().count(),
        1
    );
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[tokio::test]
async fn compute_endpoints_are_stateless() {
    let (app, tmp) = app();
    post(&app, "/api/scenarios", json!({"base_model": "tagi-2100"})).await;
    let before = snapshot(tmp.path());
    for target in [0.01, 0.1, 0.5] {
        post(
            &app,
            "/api/evaluate",
            json!({"model_id": "tagi-2043", "overrides": {"robots": target}}),
        )
        .await;
        post(&app, "/api/tornado", json!({"model_id": "tagi-2043"})).await;
        post(
            &app,
            "/api/solve",
            json!({"model_id": "tagi-2043", "target": target}),
        )
        .await;
        post(
            &app,
            "/api/grids/evaluate",
            json!({"model_id": "tagi-2043"}),
        )
        .await;
    }
    call(&app, Method::GET, "/api/models", None).await;
    call(&app, Method::GET, "/api/scenarios", None).await;
    assert_eq!(snapshot(tmp.path()), before);
}
