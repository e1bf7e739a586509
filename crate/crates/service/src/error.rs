use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};
use toxmarket_core::exchange::ErrorClass;
use toxmarket_core::{Cents, ExchangeError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Unauthorized(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{message}")]
    Conflict {
        message: String,
        remaining: Option<Cents>,
    },
    /// Some submitted records were rejected; the body carries the report.
    #[error("records rejected")]
    Rejected(Value),
    #[error("journal append failed: {0}")]
    Journal(String),
}

impl ApiError {
    pub fn conflict(message: impl Into<String>) -> Self {
        ApiError::Conflict {
            message: message.into(),
            remaining: None,
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Invalid(_) => StatusCode::BAD_REQUEST,
            ApiError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::Rejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Journal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ApiError::Invalid(_) => "invalid",
            ApiError::Unauthorized(_) => "unauthorized",
            ApiError::NotFound(_) => "not_found",
            ApiError::Conflict { .. } => "conflict",
            ApiError::Rejected(_) => "rejected",
            ApiError::Journal(_) => "journal",
        }
    }

    pub fn body(&self) -> Value {
        match self {
            ApiError::Rejected(report) => json!({ "error": self.code(), "report": report }),
            ApiError::Conflict {
                message,
                remaining: Some(r),
            } => json!({ "error": self.code(), "message": message, "remaining_cents": r.0 }),
            other => json!({ "error": other.code(), "message": other.to_string() }),
        }
    }
}

impl From<ExchangeError> for ApiError {
    fn from(e: ExchangeError) -> Self {
        let message = e.to_string();
        match (&e, e.class()) {
            (ExchangeError::WagerCapExceeded { remaining }, _) => ApiError::Conflict {
                message,
                remaining: Some(*remaining),
            },
            (_, ErrorClass::Invalid) => ApiError::Invalid(message),
            (_, ErrorClass::NotFound) => ApiError::NotFound(message),
            (_, ErrorClass::Conflict) => ApiError::conflict(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}
