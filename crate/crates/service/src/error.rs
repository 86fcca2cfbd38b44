use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fmds_core::error::FmdsError;
use serde_json::json;

/// Failures that stop the service from starting.
#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: std::io::Error },
    #[error("corrupt log: {0}")]
    CorruptLog(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] FmdsError),
}

impl StartupError {
    pub fn code(&self) -> &'static str {
        match self {
            StartupError::BindFailure { .. } => "BIND_FAILURE",
            StartupError::CorruptLog(_) => "CORRUPT_LOG",
            StartupError::Config(_) => "INVALID_CONFIG",
            StartupError::Engine(e) => e.code(),
        }
    }
}

/// Error response body: `{"code": ..., "message": ...}`.
#[derive(Debug)]
pub struct ApiError(pub FmdsError);

impl From<FmdsError> for ApiError {
    fn from(e: FmdsError) -> Self {
        ApiError(e)
    }
}

pub fn status_of(e: &FmdsError) -> StatusCode {
    use FmdsError::*;
    match e {
        UnknownAfp(_) | UnknownArea(_) | UnknownThread(_) | UnknownCard(_) => StatusCode::NOT_FOUND,
        OverlappingAfp { .. }
        | AfpTerminal(_)
        | InvalidAfpState { .. }
        | NotYetActive(_)
        | NoChange
        | TimeRegression { .. }
        | DuplicateId(_) => StatusCode::CONFLICT,
        NotAMember { .. } => StatusCode::FORBIDDEN,
        StorageFailure(_) | Io(_) | GapDetected { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        MalformedRecord { .. } | InvalidRequest(_) => StatusCode::BAD_REQUEST,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.0.code(), "message": self.0.to_string() });
        (status_of(&self.0), Json(body)).into_response()
    }
}

impl From<axum::extract::rejection::JsonRejection> for ApiError {
    fn from(r: axum::extract::rejection::JsonRejection) -> Self {
        ApiError(FmdsError::InvalidRequest(r.body_text()))
    }
}

impl From<axum::extract::rejection::QueryRejection> for ApiError {
    fn from(r: axum::extract::rejection::QueryRejection) -> Self {
        ApiError(FmdsError::InvalidRequest(r.body_text()))
    }
}

impl From<axum::extract::rejection::PathRejection> for ApiError {
    fn from(r: axum::extract::rejection::PathRejection) -> Self {
        ApiError(FmdsError::InvalidRequest(r.body_text()))
    }
}
