use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use nrts_core::{BundleError, ScoreError, StoreError, Violation};
use serde::{Deserialize, Serialize};

/// JSON body of every non-2xx API response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violations: Option<Vec<Violation>>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error_code: code.to_string(),
                message: message.into(),
                violations: None,
            },
        }
    }

    pub fn invalid_trace(violations: Vec<Violation>) -> Self {
        let mut e = Self::new(
            StatusCode::BAD_REQUEST,
            "invalid_trace",
            format!("trace has {} violation(s)", violations.len()),
        );
        e.body.violations = Some(violations);
        e
    }

    pub fn no_gold() -> Self {
        Self::new(StatusCode::CONFLICT, "no_gold", "no gold standard is installed")
    }

    pub fn bad_session_id(raw: &str) -> Self {
        Self::new(
            StatusCode::BAD_REQUEST,
            "invalid_session_id",
            format!("`{raw}` is not a session id"),
        )
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(what) => {
                Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
            }
            StoreError::Score(ScoreError::Invalid(v)) => Self::invalid_trace(v),
            other => {
                tracing::error!(error = %other, "storage failure");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", other.to_string())
            }
        }
    }
}

impl From<ScoreError> for ApiError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::Invalid(v) => Self::invalid_trace(v),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "scoring_failure", other.to_string()),
        }
    }
}

impl From<BundleError> for ApiError {
    fn from(e: BundleError) -> Self {
        let message = e.to_string();
        let mut err = Self::new(StatusCode::BAD_REQUEST, "invalid_bundle", message);
        if let BundleError::Trace(v) = e {
            err.body.violations = Some(v);
        }
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
