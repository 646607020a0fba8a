//! Response envelope and error mapping.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};

use sketchforge_core::handdraw::HanddrawError;
use sketchforge_core::pipeline::PipelineError;
use sketchforge_core::seqmodel::ModelError;
use sketchforge_core::sketch::SketchError;
use sketchforge_core::solver::SolveError;
use sketchforge_core::tokenizer::TokenError;

/// Error body: `{"ok": false, "error": {code, message, location}}`, plus an
/// optional best-effort `result`.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub location: Option<String>,
    pub result: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), location: None, result: None }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn at(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }

    pub fn body(&self) -> Value {
        let mut v = json!({
            "ok": false,
            "error": { "code": self.code, "message": self.message, "location": self.location },
        });
        if let Some(r) = &self.result {
            v["result"] = r.clone();
        }
        v
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

/// `{"ok": true, "result": …}` with status 200.
pub fn ok<T: Serialize>(result: T) -> Response {
    (StatusCode::OK, Json(json!({ "ok": true, "result": result }))).into_response()
}

/// Parses a JSON request body; syntax and schema errors become 400s with
/// a `line:column` location.
pub fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::bad_request("malformed_request", e.to_string()).at(format!("{}:{}", e.line(), e.column()))
    })
}

impl From<SketchError> for ApiError {
    fn from(e: SketchError) -> Self {
        Self::bad_request("invalid_sketch", e.to_string())
    }
}

impl From<TokenError> for ApiError {
    fn from(e: TokenError) -> Self {
        let location = match &e {
            TokenError::MalformedSequence { index, .. } | TokenError::InvalidReference { index, .. } => {
                Some(format!("token {index}"))
            }
            _ => None,
        };
        Self { location, ..Self::bad_request("invalid_tokens", e.to_string()) }
    }
}

impl From<SolveError> for ApiError {
    fn from(e: SolveError) -> Self {
        Self::bad_request("unsupported_constraint", e.to_string())
    }
}

impl From<HanddrawError> for ApiError {
    fn from(e: HanddrawError) -> Self {
        match e {
            HanddrawError::InvalidConfig(_) | HanddrawError::BadShape { .. } => Self::bad_request("invalid_config", e.to_string()),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "render_failed", e.to_string()),
        }
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Token(t) => t.into(),
            ModelError::Handdraw(h) => h.into(),
            ModelError::Checkpoint(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "bad_checkpoint", e.to_string()),
            _ => Self::bad_request("model_error", e.to_string()),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        Self::bad_request("pipeline_error", e.to_string())
    }
}
