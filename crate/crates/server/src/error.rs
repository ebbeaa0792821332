use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use citytrail_core::engine::EngineError;
use citytrail_core::persistence::{AccountError, StoreError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Validation,
    Auth,
    Conflict,
    Sequence,
    NotFound,
    Content,
    Io,
}

/// The body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    /// Set on the 409 returned when a saved result would be replaced
    /// without `overwrite`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rejected_exists: bool,
}

impl ApiError {
    pub fn new(status: StatusCode, code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code,
            message: message.into(),
            field: None,
            rejected_exists: false,
        }
    }

    pub fn with_field(mut self, field: &str) -> Self {
        self.field = Some(field.to_string());
        self
    }

    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Validation,
            message,
        )
        .with_field(field)
    }

    pub fn auth() -> Self {
        ApiError::new(
            StatusCode::UNAUTHORIZED,
            ErrorCode::Auth,
            "missing or invalid credentials",
        )
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, ErrorCode::NotFound, message)
    }

    pub fn sequence(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::CONFLICT, ErrorCode::Sequence, message)
    }

    pub fn result_exists(questionnaire: &str) -> Self {
        let mut e = ApiError::new(
            StatusCode::CONFLICT,
            ErrorCode::Conflict,
            format!("a result for {questionnaire:?} is already saved; resend with overwrite to replace it"),
        )
        .with_field("overwrite");
        e.rejected_exists = true;
        e
    }

    fn internal(err: &dyn std::fmt::Display) -> Self {
        tracing::error!("storage failure: {err}");
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            ErrorCode::Io,
            "storage failure",
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, axum::Json(self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        ApiError::internal(&err)
    }
}

impl From<AccountError> for ApiError {
    fn from(err: AccountError) -> Self {
        match err {
            AccountError::Validation(fields) => {
                let message = fields
                    .iter()
                    .map(|f| format!("{}: {}", f.field, f.message))
                    .collect::<Vec<_>>()
                    .join("; ");
                let first = fields.first().map(|f| f.field.clone());
                let mut e = ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    ErrorCode::Validation,
                    message,
                );
                e.field = first;
                e
            }
            AccountError::Auth => ApiError::auth(),
            AccountError::UnknownUser(_) => ApiError::not_found("unknown user"),
            AccountError::InvalidArgument(msg) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::Validation, msg)
            }
            AccountError::Store(e) => e.into(),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(err: EngineError) -> Self {
        let message = err.to_string();
        match err {
            EngineError::Language(_) => ApiError::validation("language", message),
            EngineError::TimeRegression { .. } => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                ErrorCode::Sequence,
                message,
            )
            .with_field("t"),
            EngineError::InvalidChoice { .. } => ApiError::validation("choice_index", message),
            EngineError::OutOfOrder { .. } => {
                ApiError::sequence(message).with_field("question_index")
            }
            EngineError::QuizActive { .. }
            | EngineError::NoActiveQuiz
            | EngineError::NotFired(_)
            | EngineError::QuizIncomplete { .. } => ApiError::sequence(message),
            EngineError::UnknownPoi(_) => ApiError::not_found(message),
            EngineError::NoQuestions { .. } => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                ErrorCode::Content,
                message,
            ),
            EngineError::Store(e) => e.into(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        let text = rejection.body_text();
        let mut e = ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Validation,
            text.clone(),
        );
        e.field = missing_or_bad_field(&text);
        e
    }
}

impl From<QueryRejection> for ApiError {
    fn from(rejection: QueryRejection) -> Self {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Validation,
            rejection.body_text(),
        )
    }
}

/// Pull the field name out of serde's "missing field `x`" style messages.
fn missing_or_bad_field(text: &str) -> Option<String> {
    let start = text.find("field `")? + "field `".len();
    let len = text[start..].find('`')?;
    Some(text[start..start + len].to_string())
}
