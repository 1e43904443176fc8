use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

pub type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("query {0} is not the pending query")]
    StaleQuery(u64),
    #[error("session is complete")]
    SessionComplete,
    #[error("ranking is available only after the session is complete")]
    RankingLocked,
    #[error("malformed request body: {0}")]
    MalformedBody(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unknown image {0}")]
    ImageNotFound(String),
    #[error("storage failure: {0}")]
    Storage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::StaleQuery(_) => "stale_query",
            ApiError::SessionComplete => "session_complete",
            ApiError::RankingLocked => "ranking_locked",
            ApiError::MalformedBody(_) => "malformed_body",
            ApiError::InvalidRequest(_) => "invalid_request",
            ApiError::ImageNotFound(_) => "image_not_found",
            ApiError::Storage(_) => "storage_error",
            ApiError::Internal(_) => "internal_error",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) | ApiError::ImageNotFound(_) => StatusCode::NOT_FOUND,
            ApiError::StaleQuery(_) | ApiError::SessionComplete => StatusCode::CONFLICT,
            ApiError::RankingLocked => StatusCode::FORBIDDEN,
            ApiError::MalformedBody(_) | ApiError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Storage(_) | ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<pairank_core::Error> for ApiError {
    fn from(e: pairank_core::Error) -> Self {
        use pairank_core::Error as E;
        match e {
            E::StaleQuery(id) => ApiError::StaleQuery(id),
            E::BudgetExhausted => ApiError::SessionComplete,
            E::InvalidInput(_)
            | E::InvalidConfig(_)
            | E::DuplicateItem(_)
            | E::UnknownItem(_)
            | E::MissingPrior(_)
            | E::SelfComparison(_)
            | E::InvalidOutcome(_) => ApiError::InvalidRequest(e.to_string()),
            E::QueryPending | E::OutOfOrder { .. } | E::MalformedLog(_) => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Storage(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { code: self.code(), message: self.to_string() };
        (self.status(), Json(body)).into_response()
    }
}
