use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use bvr_core::dataset::{encode_features, encoded_columns, FeatureVector};
use bvr_service::{router, with_cors, AppState, LoadedModel};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

fn app(model: Option<&str>) -> Router {
    let state = match model {
        Some(name) => AppState::with_model(LoadedModel::load(&fixture(&format!("fixtures/{name}"))).unwrap()),
        None => AppState::default(),
    };
    router(state)
}

fn base_state() -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture("fixtures/state.json")).unwrap()).unwrap()
}

async fn call(app: &Router, method: &str, path: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(path);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, v)
}

#[tokio::test]
async fn golden_suite() {
    let app = app(Some("model.json"));
    let cases: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(fixture("golden.json")).unwrap()).unwrap();
    assert!(!cases.is_empty());
    for case in cases {
        let name = case["name"].as_str().unwrap();
        let (status, body) = call(
            &app,
            case["method"].as_str().unwrap(),
            case["path"].as_str().unwrap(),
            case.get("body").cloned(),
        )
        .await;
        assert_eq!(status.as_u16() as u64, case["status"].as_u64().unwrap(), "{name}: {body}");
        assert_eq!(body, case["response"], "{name}");
    }
}

#[tokio::test]
async fn healthz_without_model() {
    let (status, body) = call(&app(None), "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!("ok"));
}

#[tokio::test]
async fn unloaded_service_returns_503() {
    let app = app(None);
    let (s, _) = call(&app, "GET", "/api/v1/model", None).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    let (s, _) = call(&app, "POST", "/api/v1/predict", Some(base_state())).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    let sweep = json!({"base": base_state(), "field": "distance", "lo": 0.0, "hi": 1.0, "steps": 2});
    let (s, _) = call(&app, "POST", "/api/v1/sweep", Some(sweep)).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn predict_matches_library_path() {
    let loaded = LoadedModel::load(&fixture("fixtures/model.json")).unwrap();
    let app = app(Some("model.json"));
    let mut state = base_state();
    for d in [5000.0, 19999.0, 20000.0, 80000.0] {
        state["distance"] = json!(d);
        let (s, body) = call(&app, "POST", "/api/v1/predict", Some(state.clone())).await;
        assert_eq!(s, StatusCode::OK);
        let fv = FeatureVector::from_value(&state).unwrap();
        let direct = loaded.model.predict(&encode_features(&fv)).unwrap().clamp(0.0, 1.0);
        assert_eq!(body["index"].as_f64().unwrap(), direct);
        assert_eq!(body["model_id"], json!(loaded.model_id));
    }
}

#[tokio::test]
async fn predict_is_repeatable() {
    let app = app(Some("model.json"));
    let a = call(&app, "POST", "/api/v1/predict", Some(base_state())).await;
    let b = call(&app, "POST", "/api/v1/predict", Some(base_state())).await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn index_is_clamped() {
    let text = std::fs::read_to_string(fixture("fixtures/flat_model.json")).unwrap();
    for (base, want) in [(1.7, 1.0), (-0.4, 0.0)] {
        let mut m: Value = serde_json::from_str(&text).unwrap();
        m["base_score"] = json!(base);
        let app = router(AppState::with_model(LoadedModel::from_json(&m.to_string()).unwrap()));
        let (s, body) = call(&app, "POST", "/api/v1/predict", Some(base_state())).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(body["index"], json!(want));
    }
}

#[tokio::test]
async fn malformed_and_incomplete_requests() {
    let app = app(Some("model.json"));
    let req = Request::builder()
        .method("POST")
        .uri("/api/v1/predict")
        .body(Body::from("{not json"))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);

    let mut state = base_state();
    state.as_object_mut().unwrap().remove("delta_alt");
    state["extra"] = json!(1);
    let (s, body) = call(&app, "POST", "/api/v1/predict", Some(state)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let fields: Vec<&str> = body["fields"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["field"].as_str().unwrap())
        .collect();
    assert!(fields.contains(&"delta_alt") && fields.contains(&"extra"), "{fields:?}");
}

#[tokio::test]
async fn sweep_endpoints_are_exact() {
    let app = app(Some("model.json"));
    let req = json!({"base": base_state(), "field": "delta_alt", "lo": -3000.0, "hi": 2000.0, "steps": 2});
    let (s, body) = call(&app, "POST", "/api/v1/sweep", Some(req)).await;
    assert_eq!(s, StatusCode::OK);
    let vals: Vec<f64> = body.as_array().unwrap().iter().map(|p| p["value"].as_f64().unwrap()).collect();
    assert_eq!(vals, vec![-3000.0, 2000.0]);
}

#[tokio::test]
async fn sweep_counts_and_order() {
    let app = app(Some("model.json"));
    let req = json!({"base": base_state(), "field": "distance", "lo": 10000.0, "hi": 90000.0, "steps": 50});
    let (_, body) = call(&app, "POST", "/api/v1/sweep", Some(req)).await;
    let pts = body.as_array().unwrap();
    assert_eq!(pts.len(), 50);
    assert!(pts.windows(2).all(|w| w[0]["value"].as_f64() < w[1]["value"].as_f64()));
    assert!(pts.iter().all(|p| (0.0..=1.0).contains(&p["index"].as_f64().unwrap())));

    // default category list
    let req = json!({"base": base_state(), "field": "enemy_shot_phi"});
    let (s, body) = call(&app, "POST", "/api/v1/sweep", Some(req)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body.as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn flat_model_sweeps_flat() {
    let app = app(Some("flat_model.json"));
    let req = json!({"base": base_state(), "field": "aspect", "lo": 0.0, "hi": 180.0, "steps": 7});
    let (_, body) = call(&app, "POST", "/api/v1/sweep", Some(req)).await;
    let pts = body.as_array().unwrap();
    assert_eq!(pts.len(), 7);
    assert!(pts.iter().all(|p| p["index"] == json!(0.62)));
}

#[tokio::test]
async fn invalid_sweeps_rejected() {
    let app = app(Some("model.json"));
    let base = base_state();
    let bad = [
        json!({"base": base, "field": "distance", "lo": 0.0, "hi": 1.0, "steps": 501}),
        json!({"base": base, "field": "distance", "lo": 5.0, "hi": 1.0, "steps": 5}),
        json!({"base": base, "field": "altitude", "lo": 0.0, "hi": 1.0, "steps": 5}),
        json!({"base": base, "field": "own_shot_phi", "lo": 0.0, "hi": 1.0, "steps": 5}),
        json!({"base": base, "field": "own_shot_phi", "values": ["LOFT"]}),
        // every point must satisfy the invariants
        json!({"base": base, "field": "aspect", "lo": 0.0, "hi": 270.0, "steps": 4}),
        json!({"field": "distance", "lo": 0.0, "hi": 1.0, "steps": 5}),
    ];
    for req in bad {
        let (s, body) = call(&app, "POST", "/api/v1/sweep", Some(req.clone())).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{req} -> {body}");
        assert!(body["error"].is_string());
    }
}

#[tokio::test]
async fn model_metadata_echoes_artifact() {
    let app = app(Some("model.json"));
    let (s, body) = call(&app, "GET", "/api/v1/model", None).await;
    assert_eq!(s, StatusCode::OK);
    let schema: Vec<String> = serde_json::from_value(body["schema"].clone()).unwrap();
    assert_eq!(schema, encoded_columns());
    assert_eq!(body["cv"]["mean_rmse"], json!(0.06));
    assert_eq!(body["cv"]["mean_r2"], json!(0.7));
    assert_eq!(body["trained_at"], json!("2026-01-01T00:00:00Z"));
    assert_eq!(body["hyperparams"]["max_depth"], json!(2));
}

#[test]
fn mismatched_schema_refused_at_load() {
    let text = std::fs::read_to_string(fixture("fixtures/flat_model.json")).unwrap();
    let mut m: Value = serde_json::from_str(&text).unwrap();
    m["schema"].as_array_mut().unwrap().pop();
    assert!(LoadedModel::from_json(&m.to_string()).is_err());
}

#[tokio::test]
async fn cors_allows_configured_origin() {
    let app = with_cors(app(Some("model.json")), &["http://localhost:5173".to_string()]).unwrap();
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/api/v1/predict")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(
        resp.headers().get("access-control-allow-origin").unwrap(),
        "http://localhost:5173"
    );
    assert!(with_cors(router(AppState::default()), &["bad\norigin".to_string()]).is_err());
}
