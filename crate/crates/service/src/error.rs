use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use skelforge_core::Error;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    /// Optimistic concurrency failure or cross-shape request. Carries the
    /// current revision when there is one.
    Conflict { message: String, revision: Option<u64> },
    Unprocessable(String),
    BadRequest(String),
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn message(&self) -> &str {
        match self {
            ApiError::NotFound(m)
            | ApiError::Unprocessable(m)
            | ApiError::BadRequest(m)
            | ApiError::Internal(m)
            | ApiError::Conflict { message: m, .. } => m,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::StepOutOfBounds(_)
            | Error::NotALeafBranch(_)
            | Error::UnknownBranchId(_)
            | Error::NothingTo(_)
            | Error::InvalidRange { .. }
            | Error::UnknownHistoryEntry(_)
            | Error::TooFewPreservedEndpoints(_)
            | Error::EmptyMask
            | Error::EmptyShape
            | Error::MultipleComponents(_)
            | Error::ContourTooShort { .. }
            | Error::NoSubmissions => ApiError::Unprocessable(message),
            Error::IncompatibleLadders(_) => ApiError::Conflict { message, revision: None },
            _ => ApiError::Internal(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if let ApiError::Internal(m) = &self {
            log::error!("{m}");
        }
        let mut body = json!({ "error": self.message() });
        if let ApiError::Conflict { revision: Some(r), .. } = &self {
            body["revision"] = (*r).into();
        }
        (self.status(), Json(body)).into_response()
    }
}
