use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cascade_core::aggregate::AggregateError;
use cascade_core::cascade::CascadeError;
use cascade_core::grid::GridError;
use cascade_core::hazard::HazardError;
use cascade_core::sensitivity::SensitivityError;
use cascade_store::StoreError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    Infeasible,
    Conflict,
    Storage,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Infeasible => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::Storage => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        let message = message.into();
        ApiError {
            code,
            message: if message.is_empty() {
                format!("{code:?}")
            } else {
                message
            },
            detail: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = match &e {
            StoreError::NotFound { .. } => ErrorCode::NotFound,
            StoreError::Conflict(_) => ErrorCode::Conflict,
            StoreError::Cascade(_) => ErrorCode::BadRequest,
            StoreError::ReadOnly
            | StoreError::Io { .. }
            | StoreError::Document { .. }
            | StoreError::DuplicateModel { .. } => ErrorCode::Storage,
        };
        let mut err = ApiError::new(code, e.to_string());
        if let StoreError::Conflict(id) = &e {
            err.detail = Some(json!({ "id": id }));
        }
        err
    }
}

impl From<SensitivityError> for ApiError {
    fn from(e: SensitivityError) -> Self {
        let detail = match &e {
            SensitivityError::Infeasible {
                target,
                max_achievable,
                zero_factors,
            } => json!({
                "target": target,
                "max_achievable": max_achievable,
                "zero_factors": zero_factors,
            }),
            SensitivityError::RequiredExceedsOne {
                factor_id,
                required,
                max_achievable,
            } => json!({
                "factor_id": factor_id,
                "required": required,
                "max_achievable": max_achievable,
            }),
            _ => return ApiError::bad_request(e.to_string()),
        };
        ApiError {
            code: ErrorCode::Infeasible,
            message: e.to_string(),
            detail: Some(detail),
        }
    }
}

macro_rules! bad_request_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                ApiError::bad_request(e.to_string())
            }
        }
    )*};
}

bad_request_from!(CascadeError, GridError, HazardError, AggregateError);
