#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use sketchforge::{router, AppState, CheckpointStore};
use sketchforge_core::pipeline::synth::unit_rectangle;
use sketchforge_core::seqmodel::{train, ModelConfig, ModelKind, TrainConfig, TrainItem};
use sketchforge_core::Model32;

pub fn app(store: Arc<CheckpointStore>) -> axum::Router {
    router(AppState { checkpoints: store })
}

pub fn empty_app() -> axum::Router {
    app(Arc::new(CheckpointStore::new(None)))
}

pub async fn call(app: &axum::Router, method: &str, path: &str, body: impl Into<Body>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(path)
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).expect("JSON body"))
}

pub async fn post(app: &axum::Router, path: &str, body: &Value) -> (StatusCode, Value) {
    call(app, "POST", path, body.to_string()).await
}

pub fn rectangle_json() -> Value {
    serde_json::from_str(&unit_rectangle().to_json()).unwrap()
}

/// Line constrained both horizontal and vertical: no solution.
pub fn contradiction_json() -> Value {
    serde_json::json!({
        "primitives": [{"kind": "line", "params": [0.0, 0.0, 1.0, 0.3]}],
        "constraints": [
            {"kind": "horizontal", "refs": [{"primitive": 0, "slot": "whole"}]},
            {"kind": "vertical", "refs": [{"primitive": 0, "slot": "whole"}]}
        ]
    })
}

/// Desk primitive model that has memorized the unit rectangle.
pub fn toy_model() -> Model32 {
    static MODEL: OnceLock<Model32> = OnceLock::new();
    MODEL
        .get_or_init(|| {
            let item = TrainItem::new(unit_rectangle()).unwrap();
            let corpus = vec![item; 16];
            let cfg = TrainConfig { epochs: 60, batch_size: 4, base_lr: 0.1, noise_sigma: 0.0, ..TrainConfig::default() };
            train::<f32>(ModelConfig::desk(ModelKind::Primitive), &corpus, &cfg).unwrap().model
        })
        .clone()
}
