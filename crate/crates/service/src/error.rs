use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cbaco_core::obligation::ObligationError;
use cbaco_core::policy::PolicyError;
use cbaco_core::strategy::StrategyError;
use cbaco_core::workspace::WorkspaceError;
use serde_json::json;
use thiserror::Error;

/// Errors of the session service, each mapped to an HTTP status.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("derivation node {0} does not exist")]
    UnknownNode(usize),

    #[error("{0}")]
    BadRequest(String),

    #[error("policy is not well-formed ({} violation(s))", .0.len())]
    NotWellFormed(Vec<String>),

    #[error("{0}")]
    Conflict(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession(_) | ServiceError::UnknownNode(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotWellFormed(_) | ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.to_string() });
        if let ServiceError::NotWellFormed(v) = &self {
            body["violations"] = json!(v);
        }
        (self.status(), Json(body)).into_response()
    }
}

impl From<WorkspaceError> for ServiceError {
    fn from(e: WorkspaceError) -> Self {
        ServiceError::BadRequest(e.to_string())
    }
}

impl From<PolicyError> for ServiceError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::NotWellFormed(v) => ServiceError::NotWellFormed(v.iter().map(ToString::to_string).collect()),
            e => ServiceError::BadRequest(e.to_string()),
        }
    }
}

/// Events the simulation refuses conflict with the session's history.
impl From<ObligationError> for ServiceError {
    fn from(e: ObligationError) -> Self {
        ServiceError::Conflict(e.to_string())
    }
}

impl From<StrategyError> for ServiceError {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::Syntax(_) | StrategyError::UnknownRule(_) => ServiceError::BadRequest(e.to_string()),
            StrategyError::UnknownNode(n) => ServiceError::UnknownNode(n),
            StrategyError::BudgetExceeded(_) | StrategyError::Rewrite(_) => ServiceError::Conflict(e.to_string()),
        }
    }
}
