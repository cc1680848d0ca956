use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),
    #[error("startup: {0}")]
    Startup(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Errors returned to HTTP clients as `{"error": ..., "line": ...}`.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error("no such session")]
    NotFound,
    #[error("{0}")]
    Conflict(String),
    #[error("the game is over")]
    Gone,
    #[error("{message}")]
    Unprocessable {
        message: String,
        line: Option<usize>,
    },
    #[error("upstream agent failed: {0}")]
    Upstream(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn invalid(message: impl Into<String>) -> Self {
        ApiError::Unprocessable {
            message: message.into(),
            line: None,
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Gone => StatusCode::GONE,
            ApiError::Unprocessable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Upstream(_) => StatusCode::BAD_GATEWAY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.to_string() });
        if let ApiError::Unprocessable {
            line: Some(line), ..
        } = &self
        {
            body["line"] = json!(line);
        }
        (self.status(), Json(body)).into_response()
    }
}
