//! HTTP endpoints.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use sketchforge_core::handdraw::{rasterize, simulate_hand_drawing, NoiseConfig};
use sketchforge_core::seqmodel::{autoconstrain, generate, Context, Generated, SamplerConfig};
use sketchforge_core::sketch::{degrees_of_freedom, normalize_sketch, DofReport, NormalizeTransform, Sketch};
use sketchforge_core::solver::{self, SolveOptions, SolveReport};
use sketchforge_core::tokenizer::{decode_constraints, decode_primitives, encode_constraints, encode_primitives, vocab, TokenTriple};

use crate::api::{ok, parse, ApiError};
use crate::store::CheckpointStore;

/// Largest `k` accepted by `/complete`.
pub const MAX_COMPLETIONS: usize = 64;

#[derive(Debug, Clone, Default)]
pub struct AppState {
    pub checkpoints: Arc<CheckpointStore>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/solve", post(solve))
        .route("/tokenize", post(tokenize))
        .route("/detokenize", post(detokenize))
        .route("/render", post(render))
        .route("/complete", post(complete))
        .route("/autoconstrain", post(autoconstrain_route))
        .route("/dof", post(dof))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

/// Runs CPU-bound work off the async executor.
async fn blocking(f: impl FnOnce() -> Result<Response, ApiError> + Send + 'static) -> Response {
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => axum::response::IntoResponse::into_response(e),
        Err(e) => axum::response::IntoResponse::into_response(ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            e.to_string(),
        )),
    }
}

fn yes() -> bool {
    true
}

async fn healthz() -> Response {
    ok(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

#[derive(Debug, Deserialize)]
pub struct SolveRequest {
    pub sketch: Sketch<f64>,
    #[serde(default)]
    pub options: SolveOptions,
}

#[derive(Debug, Serialize)]
pub struct SolveResponse {
    pub sketch: Sketch<f64>,
    pub report: SolveReport,
}

/// Solves; a non-converged result is a 409 whose body still carries the
/// best-effort sketch and report under `result`.
pub fn solve_request(req: &SolveRequest) -> Result<SolveResponse, ApiError> {
    let (sketch, report) = solver::solve(&req.sketch, &req.options)?;
    let out = SolveResponse { sketch, report };
    if out.report.converged {
        Ok(out)
    } else {
        let mut e = ApiError::new(
            StatusCode::CONFLICT,
            "non_convergent",
            format!("max constraint violation {:e} after {} iterations", out.report.max_constraint_violation, out.report.iterations),
        );
        e.result = Some(serde_json::to_value(&out).expect("serializable"));
        Err(e)
    }
}

async fn solve(body: Bytes) -> Response {
    blocking(move || {
        let req: SolveRequest = parse(&body)?;
        solve_request(&req).map(ok)
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct TokenizeRequest {
    pub sketch: Sketch<f64>,
    /// Normalize before quantizing (the codec assumes normalized units).
    #[serde(default = "yes")]
    pub normalize: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TokenStreams {
    pub primitives: Vec<TokenTriple>,
    pub constraints: Vec<TokenTriple>,
    #[serde(default)]
    pub transform: Option<NormalizeTransform<f64>>,
}

async fn tokenize(body: Bytes) -> Response {
    let run = || -> Result<Response, ApiError> {
        let req: TokenizeRequest = parse(&body)?;
        let (s, transform) = if req.normalize {
            let (s, t) = normalize_sketch(&req.sketch)?;
            (s, Some(t))
        } else {
            (req.sketch, None)
        };
        Ok(ok(TokenStreams { primitives: encode_primitives(&s)?, constraints: encode_constraints(&s)?, transform }))
    };
    run().unwrap_or_else(axum::response::IntoResponse::into_response)
}

#[derive(Debug, Deserialize)]
pub struct DetokenizeRequest {
    pub primitives: Vec<TokenTriple>,
    #[serde(default)]
    pub constraints: Option<Vec<TokenTriple>>,
}

async fn detokenize(body: Bytes) -> Response {
    let run = || -> Result<Response, ApiError> {
        let req: DetokenizeRequest = parse(&body)?;
        let s: Sketch<f64> = decode_primitives(&req.primitives).map_err(|e| ApiError::from(e).at_stream("primitives"))?;
        let s = match &req.constraints {
            Some(c) => {
                let cons = decode_constraints(c, &s).map_err(|e| ApiError::from(e).at_stream("constraints"))?;
                s.with_constraints(cons)?
            }
            None => s,
        };
        Ok(ok(serde_json::json!({ "sketch": s })))
    };
    run().unwrap_or_else(axum::response::IntoResponse::into_response)
}

impl ApiError {
    fn at_stream(self, stream: &str) -> Self {
        let loc = match &self.location {
            Some(l) => format!("{stream}: {l}"),
            None => stream.to_string(),
        };
        self.at(loc)
    }
}

#[derive(Debug, Deserialize)]
pub struct RenderRequest {
    pub sketch: Sketch<f64>,
    /// Hand-drawn simulation settings; omitted means a clean raster.
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default = "yes")]
    pub normalize: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RenderResponse {
    pub width: usize,
    pub height: usize,
    pub png_base64: String,
}

pub fn render_request(req: &RenderRequest) -> Result<RenderResponse, ApiError> {
    let s = if req.normalize { normalize_sketch(&req.sketch)?.0 } else { req.sketch.clone() };
    let img = match &req.noise {
        Some(cfg) => simulate_hand_drawing(&s, cfg)?,
        None => rasterize(&s),
    };
    let png = img.to_png()?;
    Ok(RenderResponse {
        width: img.width,
        height: img.height,
        png_base64: base64::engine::general_purpose::STANDARD.encode(png),
    })
}

async fn render(body: Bytes) -> Response {
    blocking(move || {
        let req: RenderRequest = parse(&body)?;
        render_request(&req).map(ok)
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct CompleteRequest {
    pub checkpoint: String,
    /// Primitive-token prefix starting at `Start`.
    #[serde(default)]
    pub primer: Option<Vec<TokenTriple>>,
    /// Alternatively, a sketch whose first `keep_fraction` of primitives
    /// (rounded up) forms the prefix.
    #[serde(default)]
    pub sketch: Option<Sketch<f64>>,
    #[serde(default = "default_keep")]
    pub keep_fraction: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub nucleus_p: Option<f64>,
}

fn default_keep() -> f64 {
    0.6
}

fn default_k() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Completion {
    pub tokens: Vec<TokenTriple>,
    pub sketch: Option<Sketch<f64>>,
    pub error: Option<String>,
}

impl From<Generated> for Completion {
    fn from(g: Generated) -> Self {
        Self { tokens: g.tokens, sketch: g.sketch, error: g.error }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CompleteResponse {
    pub primer: Vec<TokenTriple>,
    pub completions: Vec<Completion>,
}

/// Primitive-token prefix holding the first `ceil(keep·n)` primitives.
pub fn primer_from_sketch(s: &Sketch<f64>, keep: f64) -> Result<Vec<TokenTriple>, ApiError> {
    if !(0.0..=1.0).contains(&keep) {
        return Err(ApiError::bad_request("invalid_request", "keep_fraction must lie in [0, 1]").at("keep_fraction"));
    }
    let bare = Sketch::from_primitives(normalize_sketch(s)?.0.primitives().to_vec());
    let m = (keep * bare.primitives().len() as f64).ceil() as u32;
    Ok(encode_primitives(&bare)?.into_iter().filter(|t| t.value != vocab::STOP && t.position <= m).collect())
}

pub fn complete_request(store: &CheckpointStore, req: &CompleteRequest) -> Result<CompleteResponse, ApiError> {
    if req.k == 0 || req.k > MAX_COMPLETIONS {
        return Err(ApiError::bad_request("invalid_request", format!("k must lie in 1..={MAX_COMPLETIONS}")).at("k"));
    }
    let primer = match (&req.primer, &req.sketch) {
        (Some(p), None) => p.clone(),
        (None, Some(s)) => primer_from_sketch(s, req.keep_fraction)?,
        (None, None) => vec![TokenTriple::start()],
        (Some(_), Some(_)) => return Err(ApiError::bad_request("invalid_request", "give either primer or sketch, not both")),
    };
    let model = store.get(&req.checkpoint)?;
    let completions = (0..req.k as u64)
        .map(|i| {
            let mut cfg = SamplerConfig::primitives(req.seed.wrapping_add(i));
            if let Some(p) = req.nucleus_p {
                cfg.nucleus_p = p;
            }
            let ctx = if primer.len() > 1 { Context::Primer(primer.clone()) } else { Context::None };
            generate(&model, &ctx, &cfg).map(Completion::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompleteResponse { primer, completions })
}

async fn complete(State(state): State<AppState>, body: Bytes) -> Response {
    blocking(move || {
        let req: CompleteRequest = parse(&body)?;
        complete_request(&state.checkpoints, &req).map(ok)
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct AutoconstrainRequest {
    pub checkpoint: String,
    pub sketch: Sketch<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub nucleus_p: Option<f64>,
    /// Also solve the constrained sketch.
    #[serde(default)]
    pub solve: bool,
    #[serde(default)]
    pub options: SolveOptions,
}

#[derive(Debug, Serialize)]
pub struct AutoconstrainResponse {
    /// Input primitives (original frame) with the inferred constraints.
    pub sketch: Option<Sketch<f64>>,
    pub tokens: Vec<TokenTriple>,
    pub error: Option<String>,
    pub solved: Option<SolveResponse>,
}

pub fn autoconstrain_request(store: &CheckpointStore, req: &AutoconstrainRequest) -> Result<AutoconstrainResponse, ApiError> {
    let model = store.get(&req.checkpoint)?;
    let (normed, _) = normalize_sketch(&req.sketch)?;
    let mut cfg = SamplerConfig::constraints(req.seed);
    if let Some(p) = req.nucleus_p {
        cfg.nucleus_p = p;
    }
    let g = autoconstrain(&model, &normed, &cfg)?;
    let sketch = match &g.sketch {
        Some(s) => Some(Sketch::from_primitives(req.sketch.primitives().to_vec()).with_constraints(s.constraints().to_vec())?),
        None => None,
    };
    let solved = match (&sketch, req.solve) {
        (Some(s), true) => {
            let (sketch, report) = solver::solve(s, &req.options)?;
            Some(SolveResponse { sketch, report })
        }
        _ => None,
    };
    Ok(AutoconstrainResponse { sketch, tokens: g.tokens, error: g.error, solved })
}

async fn autoconstrain_route(State(state): State<AppState>, body: Bytes) -> Response {
    blocking(move || {
        let req: AutoconstrainRequest = parse(&body)?;
        autoconstrain_request(&state.checkpoints, &req).map(ok)
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct DofRequest {
    pub sketch: Sketch<f64>,
}

async fn dof(body: Bytes) -> Response {
    let run = || -> Result<Response, ApiError> {
        let req: DofRequest = parse(&body)?;
        let d: DofReport = degrees_of_freedom(&req.sketch);
        Ok(ok(d))
    };
    run().unwrap_or_else(axum::response::IntoResponse::into_response)
}
