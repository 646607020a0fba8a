mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use base64::Engine;
use serde_json::{json, Value};

use common::*;
use sketchforge::CheckpointStore;
use sketchforge_core::pipeline::synth::{perturb, synthetic_corpus, SynthFamily};
use sketchforge_core::sketch::Sketch;
use sketchforge_core::solver::check_satisfied;

fn sketch_of(v: &Value) -> Sketch<f64> {
    Sketch::from_json(&v.to_string()).unwrap()
}

#[tokio::test]
async fn healthz_reports_ok() {
    let (status, body) = call(&empty_app(), "GET", "/healthz", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["ok"], true);
}

#[tokio::test]
async fn tokenize_detokenize_round_trip() {
    let app = empty_app();
    for s in synthetic_corpus(SynthFamily::Mixed, 20, 3) {
        let (st, tok) = post(&app, "/tokenize", &json!({ "sketch": serde_json::from_str::<Value>(&s.to_json()).unwrap() })).await;
        assert_eq!(st, StatusCode::OK, "{tok}");
        let streams = &tok["result"];
        let (st, de) = post(&app, "/detokenize", &json!({ "primitives": streams["primitives"], "constraints": streams["constraints"] })).await;
        assert_eq!(st, StatusCode::OK, "{de}");
        let back = sketch_of(&de["result"]["sketch"]);
        assert_eq!(back.primitives().len(), s.primitives().len());
        assert_eq!(back.constraints(), s.constraints());

        // Decoded sketches are already quantized, so re-tokenizing is exact.
        let (_, again) = post(&app, "/tokenize", &json!({ "sketch": de["result"]["sketch"], "normalize": false })).await;
        assert_eq!(again["result"]["primitives"], streams["primitives"]);
        assert_eq!(again["result"]["constraints"], streams["constraints"]);
    }
}

#[tokio::test]
async fn solve_is_deterministic_and_fixes_satisfied_sketches() {
    let app = empty_app();
    let rect = rectangle_json();
    let (st, a) = post(&app, "/solve", &json!({ "sketch": rect })).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(a["result"]["report"]["converged"], true);
    assert_eq!(a["result"]["sketch"], rect);

    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
    let noisy = perturb(&sketchforge_core::pipeline::synth::unit_rectangle(), 0.01, &mut rng);
    let req = json!({ "sketch": serde_json::from_str::<Value>(&noisy.to_json()).unwrap() });
    let (_, x) = post(&app, "/solve", &req).await;
    let (_, y) = post(&app, "/solve", &req).await;
    assert_eq!(x, y);
    assert_eq!(x["result"]["report"]["converged"], true, "{}", x["result"]["report"]);
    assert!(check_satisfied(&sketch_of(&x["result"]["sketch"]), 1e-6).unwrap());
}

#[tokio::test]
async fn contradiction_is_409_with_best_effort_sketch() {
    let (st, body) = post(&empty_app(), "/solve", &json!({ "sketch": contradiction_json() })).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(body["ok"], false);
    assert_eq!(body["error"]["code"], "non_convergent");
    assert_eq!(body["result"]["report"]["converged"], false);
    assert_eq!(sketch_of(&body["result"]["sketch"]).primitives().len(), 1);
}

#[tokio::test]
async fn malformed_requests_are_400() {
    let app = empty_app();
    let (st, body) = call(&app, "POST", "/solve", "{\"sketch\": [").await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(body["ok"], false);
    assert!(body["error"]["location"].is_string());

    let bad = json!({ "sketch": { "primitives": [{ "kind": "line", "params": [0.0, 1.0] }] } });
    let (st, body) = post(&app, "/tokenize", &bad).await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "{body}");

    let (st, _) = post(&app, "/detokenize", &json!({ "primitives": [{ "value": 99, "id": 0, "position": 0 }] })).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_checkpoint_and_route_are_404() {
    let app = empty_app();
    let (st, body) = post(&app, "/complete", &json!({ "checkpoint": "nope", "k": 2 })).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "unknown_checkpoint");
    let (st, _) = post(&app, "/autoconstrain", &json!({ "checkpoint": "../etc", "sketch": rectangle_json() })).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, body) = post(&app, "/nowhere", &json!({})).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(body["ok"], false);
}

#[tokio::test]
async fn complete_returns_k_decodable_completions() {
    let store = Arc::new(CheckpointStore::new(None));
    store.insert("rect", toy_model());
    let app = app(store);
    let req = json!({ "checkpoint": "rect", "sketch": rectangle_json(), "keep_fraction": 0.6, "k": 6, "seed": 11 });
    let (st, body) = post(&app, "/complete", &req).await;
    assert_eq!(st, StatusCode::OK, "{body}");
    let completions = body["result"]["completions"].as_array().unwrap();
    assert_eq!(completions.len(), 6);
    for c in completions {
        assert!(c["error"].is_null(), "{c}");
        assert!(sketch_of(&c["sketch"]).primitives().len() >= 3);
    }
    let (_, again) = post(&app, "/complete", &req).await;
    assert_eq!(again, body);
}

#[tokio::test]
async fn checkpoints_load_from_directory() {
    let dir = tempfile::tempdir().unwrap();
    let mut buf = Vec::new();
    sketchforge_core::seqmodel::save_checkpoint(&toy_model(), &mut buf).unwrap();
    std::fs::write(dir.path().join("rect.ckpt"), buf).unwrap();
    let app = app(Arc::new(CheckpointStore::new(Some(dir.path().to_path_buf()))));
    let (st, body) = post(&app, "/complete", &json!({ "checkpoint": "rect", "k": 2 })).await;
    assert_eq!(st, StatusCode::OK, "{body}");
}

#[tokio::test]
async fn autoconstrain_with_wrong_model_kind_is_rejected() {
    let store = Arc::new(CheckpointStore::new(None));
    store.insert("rect", toy_model());
    let (st, body) = post(&app(store), "/autoconstrain", &json!({ "checkpoint": "rect", "sketch": rectangle_json() })).await;
    assert!(st.is_client_error(), "{st} {body}");
}

#[tokio::test]
async fn render_and_dof() {
    let app = empty_app();
    let req = json!({ "sketch": rectangle_json(), "noise": { "seed": 7 } });
    let (st, a) = post(&app, "/render", &req).await;
    assert_eq!(st, StatusCode::OK, "{a}");
    let (_, b) = post(&app, "/render", &req).await;
    assert_eq!(a, b);
    let png = base64::engine::general_purpose::STANDARD.decode(a["result"]["png_base64"].as_str().unwrap()).unwrap();
    assert_eq!(&png[1..4], b"PNG");

    let (st, d) = post(&app, "/dof", &json!({ "sketch": rectangle_json() })).await;
    assert_eq!(st, StatusCode::OK);
    let r = &d["result"];
    assert_eq!((r["total"].as_u64(), r["removed"].as_u64(), r["net"].as_u64()), (Some(16), Some(12), Some(4)), "{r}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn parallel_mixed_requests_match_serial_answers() {
    let app = empty_app();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    let requests: Vec<(&str, Value)> = synthetic_corpus(SynthFamily::Mixed, 24, 9)
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let s = if i % 2 == 0 { perturb(s, 0.01, &mut rng) } else { s.clone() };
            let v: Value = serde_json::from_str(&s.to_json()).unwrap();
            (if i % 2 == 0 { "/solve" } else { "/tokenize" }, json!({ "sketch": v }))
        })
        .collect();
    let mut expected = Vec::new();
    for (path, body) in &requests {
        expected.push(post(&app, path, body).await);
    }
    let mut handles = Vec::new();
    for round in 0..4 {
        for (i, (path, body)) in requests.iter().enumerate() {
            let (app, path, body) = (app.clone(), path.to_string(), body.clone());
            handles.push(tokio::spawn(async move { (i, round, post(&app, &path, &body).await) }));
        }
    }
    for h in handles {
        let (i, round, got) = h.await.unwrap();
        assert_eq!(got, expected[i], "request {i} round {round}");
    }
}
