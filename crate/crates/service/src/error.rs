use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use scratchpad_pipeline::PipelineError;
use serde_json::{json, Value};

/// JSON error envelope `{code, message, detail}`.
#[derive(Debug, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), detail: Value::Null }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let message = e.to_string();
        if e.is_unavailable() {
            return ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "backend_unavailable", message);
        }
        match &e {
            PipelineError::UnknownRun(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_run", message).with_detail(json!({ "run_id": id }))
            }
            PipelineError::UnknownSubject(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_subject", message).with_detail(json!({ "subject": id }))
            }
            PipelineError::StaleRevision { base, current } => ApiError::new(StatusCode::CONFLICT, "stale_revision", message)
                .with_detail(json!({ "base_revision": base, "current_revision": current })),
            PipelineError::Incomplete(_) => ApiError::new(StatusCode::CONFLICT, "run_incomplete", message),
            PipelineError::OutOfBounds(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "out_of_bounds", message),
            PipelineError::Config(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_config", message),
            PipelineError::Edit(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "edit_failed", message),
            PipelineError::Stage { stage, .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "stage_failed", message)
                .with_detail(json!({ "stage": stage.name() })),
            PipelineError::Integrity { file, .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "integrity", message).with_detail(json!({ "file": file }))
            }
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}
