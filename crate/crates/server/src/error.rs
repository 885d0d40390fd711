use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use proofbench_core::history::HistoryError;
use proofbench_gateway::GatewayError;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::auth::AuthError;

/// JSON error body: `{"error": {"code", "message", "details"?}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { code: code.into(), message: message.into(), details: None } }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.body.details = Some(details);
        self
    }

    pub fn unauthenticated() -> Self {
        ApiError::new(StatusCode::UNAUTHORIZED, "unauthenticated", "a bearer token is required")
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not-found", format!("{what} `{id}` not found"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad-request", message)
    }

    pub fn invalid(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::CONFLICT, "conflict", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        let status = StatusCode::from_u16(e.status()).expect("auth statuses are valid");
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<HistoryError> for ApiError {
    fn from(e: HistoryError) -> Self {
        match e {
            HistoryError::UnknownUser(id) => ApiError::not_found("user", &id),
            HistoryError::Forbidden => ApiError::forbidden("export requires the teacher role"),
            HistoryError::UnknownStream(k) => ApiError::not_found("history", &k.to_string()),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::AllAtCapacity => ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "pool-exhausted",
                "all prover instances are busy; please retry shortly",
            ),
            GatewayError::NoHealthyInstance => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "prover-unavailable", "no prover instance is available")
            }
            GatewayError::ScaleOutOfRange { .. } => ApiError::invalid("scale-out-of-range", e.to_string()),
            GatewayError::SessionStart { .. } => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "prover-unavailable", e.to_string())
            }
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.body }))).into_response()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gateway_errors_map_to_statuses() {
        assert_eq!(ApiError::from(GatewayError::AllAtCapacity).status, StatusCode::SERVICE_UNAVAILABLE);
        assert_eq!(ApiError::from(GatewayError::NoHealthyInstance).body.code, "prover-unavailable");
        let e = ApiError::from(GatewayError::ScaleOutOfRange { target: 40, max: 30 });
        assert_eq!(e.status, StatusCode::UNPROCESSABLE_ENTITY);
    }

    #[test]
    fn auth_errors_keep_their_codes() {
        let e = ApiError::from(AuthError::Expired);
        assert_eq!((e.status, e.body.code.as_str()), (StatusCode::UNAUTHORIZED, "token-expired"));
        assert_eq!(ApiError::from(AuthError::NoRoles).status, StatusCode::FORBIDDEN);
    }
}
