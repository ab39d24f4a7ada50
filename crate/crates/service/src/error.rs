use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use gos_core::GosError;
use serde_json::json;

use crate::store::StoreError;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn unauthorized() -> Self {
        Self::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "missing or wrong admin token",
        )
    }

    pub fn gone(message: impl Into<String>) -> Self {
        Self::new(StatusCode::GONE, "session_closed", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": self.code, "message": self.message })),
        )
            .into_response()
    }
}

impl From<GosError> for ApiError {
    fn from(e: GosError) -> Self {
        use GosError::*;
        let (status, code) = match &e {
            UnknownOpinion(_) | NotOnMenu(_) | DuplicateSelection(_) | EmptyResponse
            | TooManyNewOpinions { .. } | NewOpinionsDisabled => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_response")
            }
            UnknownAnnotator(_) => (StatusCode::NOT_FOUND, "unknown_annotator"),
            EmptyGraph => (StatusCode::CONFLICT, "empty_graph"),
            InvalidConfig(_) | InvalidEpsilon { .. } | LabelOutOfRange { .. } | InvalidModel(_) => {
                (StatusCode::BAD_REQUEST, "invalid_config")
            }
            Malformed(_) | Csv(_) => (StatusCode::BAD_REQUEST, "malformed"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Rejected(g) => g.into(),
            StoreError::UnknownSurvey(id) => ApiError::not_found(format!("unknown survey `{id}`")),
            StoreError::DuplicateSurvey(id) => {
                ApiError::conflict(format!("survey `{id}` already exists"))
            }
            other => ApiError::internal(other.to_string()),
        }
    }
}
