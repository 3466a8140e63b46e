//! JSON-over-HTTP inference for a trained engagement model.
//!
//! The model is loaded once at startup and shared read-only by every
//! request. Without a model the service still answers `/healthz`, and the
//! `/api/v1/*` routes return 503.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bvr_core::dataset::{encode_features, encoded_columns, FeatureVector, FieldError, FEATURE_NAMES};
use bvr_core::gbt::GbtModel;
use bvr_core::sim::scenario::ShotPhilosophy;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub const MIN_SWEEP_STEPS: usize = 2;
pub const MAX_SWEEP_STEPS: usize = 500;

/// A model plus the identifier reported with every prediction.
#[derive(Debug)]
pub struct LoadedModel {
    pub model: GbtModel,
    /// First 16 hex digits of the artifact's SHA-256.
    pub model_id: String,
}

impl LoadedModel {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let model = GbtModel::from_json(text).map_err(|e| e.to_string())?;
        if model.schema != encoded_columns() {
            return Err(format!(
                "model schema ({} columns) does not match the feature encoder ({} columns)",
                model.schema.len(),
                encoded_columns().len()
            ));
        }
        let digest = Sha256::digest(text.as_bytes());
        let model_id = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        Ok(LoadedModel { model, model_id })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    /// Clamped to [0, 1].
    pub fn index(&self, fv: &FeatureVector) -> f64 {
        let row = encode_features(fv);
        let raw = self.model.predict(&row).expect("schema checked at load");
        raw.clamp(0.0, 1.0)
    }
}

#[derive(Clone, Default)]
pub struct AppState {
    pub model: Option<Arc<LoadedModel>>,
}

impl AppState {
    pub fn with_model(model: LoadedModel) -> Self {
        AppState {
            model: Some(Arc::new(model)),
        }
    }
}

#[derive(Debug)]
pub enum ApiError {
    NoModel,
    BadRequest { message: String, fields: Vec<FieldError> },
}

impl ApiError {
    fn bad(message: impl Into<String>) -> Self {
        ApiError::BadRequest {
            message: message.into(),
            fields: Vec::new(),
        }
    }

    fn fields(fields: Vec<FieldError>) -> Self {
        ApiError::BadRequest {
            message: "invalid engagement state".into(),
            fields,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::NoModel => (
                StatusCode::SERVICE_UNAVAILABLE,
                Json(json!({ "error": "no model loaded" })),
            )
                .into_response(),
            ApiError::BadRequest { message, fields } => (
                StatusCode::BAD_REQUEST,
                Json(json!({ "error": message, "fields": fields })),
            )
                .into_response(),
        }
    }
}

fn loaded(state: &AppState) -> Result<&LoadedModel, ApiError> {
    state.model.as_deref().ok_or(ApiError::NoModel)
}

fn parse_json(body: &Bytes) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad(format!("malformed JSON: {e}")))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictResponse {
    pub index: f64,
    pub model_id: String,
}

async fn predict(State(state): State<AppState>, body: Bytes) -> Result<Json<PredictResponse>, ApiError> {
    let m = loaded(&state)?;
    let fv = FeatureVector::from_value(&parse_json(&body)?).map_err(ApiError::fields)?;
    Ok(Json(PredictResponse {
        index: m.index(&fv),
        model_id: m.model_id.clone(),
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: Value,
    pub index: f64,
}

/// Values to substitute into the base state, in output order.
fn sweep_values(req: &serde_json::Map<String, Value>) -> Result<(String, Vec<Value>), ApiError> {
    let field = match req.get("field") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(ApiError::bad("`field` must be a string")),
        None => return Err(ApiError::bad("`field` is required")),
    };
    if !FEATURE_NAMES.contains(&field.as_str()) {
        return Err(ApiError::bad(format!("unknown sweep field `{field}`")));
    }
    if let Some(values) = req.get("values") {
        let Value::Array(values) = values else {
            return Err(ApiError::bad("`values` must be an array"));
        };
        if values.is_empty() || values.len() > MAX_SWEEP_STEPS {
            return Err(ApiError::bad(format!(
                "`values` must hold 1 to {MAX_SWEEP_STEPS} entries"
            )));
        }
        let mut values = values.clone();
        if values.iter().all(Value::is_number) {
            values.sort_by(|a, b| a.as_f64().unwrap_or(0.0).total_cmp(&b.as_f64().unwrap_or(0.0)));
        }
        return Ok((field, values));
    }
    let categorical = field == "own_shot_phi" || field == "enemy_shot_phi" || field == "rwr_warning";
    if categorical && req.get("lo").is_none() {
        // no explicit list: every category in canonical order
        let all: Vec<Value> = if field == "rwr_warning" {
            vec![json!(false), json!(true)]
        } else {
            ShotPhilosophy::NAMES.iter().map(|n| json!(n)).collect()
        };
        return Ok((field, all));
    }
    if categorical {
        return Err(ApiError::bad(format!("`{field}` is categorical; sweep it with `values`")));
    }
    let num = |k: &str| -> Result<f64, ApiError> {
        req.get(k)
            .and_then(Value::as_f64)
            .filter(|v| v.is_finite())
            .ok_or_else(|| ApiError::bad(format!("`{k}` must be a finite number")))
    };
    let (lo, hi) = (num("lo")?, num("hi")?);
    if lo >= hi {
        return Err(ApiError::bad("`lo` must be below `hi`"));
    }
    let steps = req
        .get("steps")
        .and_then(Value::as_u64)
        .ok_or_else(|| ApiError::bad("`steps` must be a positive integer"))? as usize;
    if !(MIN_SWEEP_STEPS..=MAX_SWEEP_STEPS).contains(&steps) {
        return Err(ApiError::bad(format!(
            "`steps` must be in [{MIN_SWEEP_STEPS}, {MAX_SWEEP_STEPS}], got {steps}"
        )));
    }
    let values = (0..steps)
        .map(|i| {
            // exact endpoints
            let v = if i == steps - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (steps - 1) as f64
            };
            json!(v)
        })
        .collect();
    Ok((field, values))
}

async fn sweep(State(state): State<AppState>, body: Bytes) -> Result<Json<Vec<SweepPoint>>, ApiError> {
    let m = loaded(&state)?;
    let req = parse_json(&body)?;
    let Value::Object(req) = req else {
        return Err(ApiError::bad("expected a JSON object"));
    };
    let Some(Value::Object(base)) = req.get("base") else {
        return Err(ApiError::bad("`base` must be an engagement state object"));
    };
    // the base must be valid on its own before anything is swept
    FeatureVector::from_value(&Value::Object(base.clone())).map_err(ApiError::fields)?;
    let (field, values) = sweep_values(&req)?;
    let mut state = base.clone();
    let mut out = Vec::with_capacity(values.len());
    for value in values {
        state.insert(field.clone(), value.clone());
        let fv = FeatureVector::from_value(&Value::Object(state.clone())).map_err(ApiError::fields)?;
        out.push(SweepPoint {
            value,
            index: m.index(&fv),
        });
    }
    Ok(Json(out))
}

async fn model_info(State(state): State<AppState>) -> Result<Json<Value>, ApiError> {
    let m = loaded(&state)?;
    let meta = &m.model.meta;
    Ok(Json(json!({
        "model_id": m.model_id,
        "schema": m.model.schema,
        "features": FEATURE_NAMES,
        "hyperparams": m.model.hyperparams,
        "n_trees": m.model.trees().len(),
        "base_score": m.model.base_score,
        "seed": meta.seed,
        "version": meta.version,
        "trained_at": meta.trained_at,
        "train_rows": meta.train_rows,
        "cv": meta.cv,
        "metrics": meta.metrics,
    })))
}

async fn healthz() -> &'static str {
    "ok"
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/v1/predict", post(predict))
        .route("/api/v1/sweep", post(sweep))
        .route("/api/v1/model", get(model_info))
        .with_state(state)
}

/// Adds CORS for the listed origins. `*` allows any origin.
pub fn with_cors(router: Router, origins: &[String]) -> Result<Router, String> {
    if origins.is_empty() {
        return Ok(router);
    }
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        let list = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| format!("invalid CORS origin `{o}`")))
            .collect::<Result<Vec<_>, _>>()?;
        AllowOrigin::list(list)
    };
    let layer = CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([axum::http::header::CONTENT_TYPE]);
    Ok(router.layer(layer))
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub model: Option<std::path::PathBuf>,
    pub cors_origins: Vec<String>,
}

/// Binds `config.addr` and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> Result<(), String> {
    let state = match &config.model {
        Some(path) => AppState::with_model(LoadedModel::load(path)?),
        None => AppState::default(),
    };
    let app = with_cors(router(state), &config.cors_origins)?;
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|e| format!("bind {}: {e}", config.addr))?;
    eprintln!("listening on {}", config.addr);
    axum::serve(listener, app).await.map_err(|e| e.to_string())
}
