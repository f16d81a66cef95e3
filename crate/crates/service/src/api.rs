//! HTTP facade over [`Engine`].
//!
//! All bodies are JSON. Endpoints:
//!
//! | method | path        | request            | response           |
//! |--------|-------------|--------------------|--------------------|
//! | POST   | `/register` | [`RegisterRequest`]| 201 [`RegisterResponse`] |
//! | POST   | `/query`    | [`QueryRequest`]   | 200 [`QueryResponse`] |
//! | POST   | `/revoke`   | [`RevokeRequest`]  | 200 [`RevokeResponse`] |
//! | POST   | `/audit`    | [`AuditRequest`]   | 200 [`AuditResponse`] |
//! | GET    | `/health`   |                    | 200 `{"status":"ok"}` |
//!
//! Errors are `{"error": {"code": ..., "message": ...}}` with a status
//! that is unique per code (see [`ApiError::status`]).

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::SecondsFormat;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use triplegate::{
    AgentContext, AgentDescriptor, AgentId, AuditEvent, AuditFilter, AuditRecord, Binding,
    Engine, EngineError, Outcome, RegistrationError, RoleName, SessionInfo, SessionToken, Term,
    Variable,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub agent_id: String,
    pub role: String,
    pub requested_predicates: Vec<String>,
    #[serde(default)]
    pub intent_ids: Vec<String>,
    #[serde(default)]
    pub domain_ids: Vec<String>,
}

impl RegisterRequest {
    pub fn from_descriptor(d: &AgentDescriptor) -> Self {
        let strs = |s: &std::collections::BTreeSet<Term>| s.iter().map(Term::to_string).collect();
        Self {
            agent_id: d.agent_id.to_string(),
            role: d.role.to_string(),
            requested_predicates: strs(&d.requested_predicates),
            intent_ids: strs(&d.context.intent_ids),
            domain_ids: strs(&d.context.domain_ids),
        }
    }

    pub fn to_descriptor(&self) -> Result<AgentDescriptor, ApiError> {
        let bad = |what: &str, v: &str| ApiError::parse(format!("invalid {what} `{v}`"));
        let terms = |what: &str, items: &[String]| {
            items
                .iter()
                .map(|p| Term::iri(p.as_str()).map_err(|_| bad(what, p)))
                .collect::<Result<_, _>>()
        };
        let requested_predicates: std::collections::BTreeSet<Term> =
            terms("predicate", &self.requested_predicates)?;
        if requested_predicates.is_empty() {
            return Err(ApiError::parse("requested_predicates must not be empty"));
        }
        Ok(AgentDescriptor {
            agent_id: AgentId::new(self.agent_id.as_str()).map_err(|_| bad("agent_id", &self.agent_id))?,
            role: RoleName::new(self.role.as_str()).ok_or_else(|| bad("role", &self.role))?,
            requested_predicates,
            context: AgentContext {
                intent_ids: terms("intent id", &self.intent_ids)?,
                domain_ids: terms("domain id", &self.domain_ids)?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterResponse {
    pub token: String,
    pub agent_id: String,
    pub granted: Vec<String>,
    pub expires_at: String,
}

impl From<SessionInfo> for RegisterResponse {
    fn from(s: SessionInfo) -> Self {
        Self {
            token: s.token.to_string(),
            agent_id: s.agent_id.to_string(),
            granted: s.granted.iter().map(Term::to_string).collect(),
            expires_at: s.expires_at.to_rfc3339_opts(SecondsFormat::Secs, true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub token: String,
    pub query: String,
}

/// One outcome of enforcement. `rows` maps `?var` to the rendered term
/// (bare IRI or double-quoted literal).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate: Option<String>,
}

impl From<&Outcome> for QueryResponse {
    fn from(o: &Outcome) -> Self {
        let mut resp = QueryResponse {
            outcome: o.kind().as_str().to_string(),
            rows: Vec::new(),
            reason: None,
            detail: None,
            predicate: None,
        };
        match o {
            Outcome::Allowed(rows) => {
                resp.rows = rows
                    .iter()
                    .map(|b| b.iter().map(|(v, t)| (v.to_string(), t.to_string())).collect())
                    .collect();
            }
            Outcome::AccessDenied(reason) => {
                resp.reason = Some(reason.code().to_string());
                resp.detail = Some(reason.to_string());
            }
            Outcome::SessionRevoked(p) => resp.predicate = Some(p.to_string()),
        }
        resp
    }
}

impl QueryResponse {
    /// Decodes the rows back into bindings.
    pub fn bindings(&self) -> Result<Vec<Binding>, String> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(v, t)| {
                        let var = Variable::new(v.as_str()).ok_or_else(|| format!("bad variable {v}"))?;
                        let term = Term::parse(t).map_err(|e| e.to_string())?;
                        Ok((var, term))
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevokeRequest {
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevokeResponse {
    pub removed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRequest {
    #[serde(default)]
    pub agent_id: Option<String>,
    #[serde(default)]
    pub event: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub sequence: u64,
    pub timestamp: String,
    pub agent_id: String,
    pub event: String,
    pub predicate: Option<String>,
    pub detail: String,
}

impl From<&AuditRecord> for AuditEntry {
    fn from(r: &AuditRecord) -> Self {
        Self {
            sequence: r.sequence,
            timestamp: r.timestamp.to_rfc3339_opts(SecondsFormat::Millis, true),
            agent_id: r.agent_id.to_string(),
            event: r.event.to_string(),
            predicate: r.predicate.as_ref().map(Term::to_string),
            detail: r.detail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditResponse {
    pub records: Vec<AuditEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    InvalidRequest,
    UnknownToken,
    EmptyGrant,
    UnknownRole,
    DuplicateAgent,
    ParseError,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::InvalidRequest => "INVALID_REQUEST",
            ErrorCode::UnknownToken => "UNKNOWN_TOKEN",
            ErrorCode::EmptyGrant => "EMPTY_GRANT",
            ErrorCode::UnknownRole => "UNKNOWN_ROLE",
            ErrorCode::DuplicateAgent => "DUPLICATE_AGENT",
            ErrorCode::ParseError => "PARSE_ERROR",
        }
    }

    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::InvalidRequest => StatusCode::BAD_REQUEST,
            ErrorCode::UnknownToken => StatusCode::UNAUTHORIZED,
            ErrorCode::EmptyGrant => StatusCode::FORBIDDEN,
            ErrorCode::UnknownRole => StatusCode::NOT_FOUND,
            ErrorCode::DuplicateAgent => StatusCode::CONFLICT,
            ErrorCode::ParseError => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn parse(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::ParseError, message)
    }

    pub fn status(&self) -> StatusCode {
        self.code.status()
    }

    pub fn envelope(&self) -> ErrorEnvelope {
        ErrorEnvelope {
            error: ErrorBody {
                code: self.code.as_str().to_string(),
                message: self.message.clone(),
            },
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let code = match &e {
            EngineError::UnknownToken => ErrorCode::UnknownToken,
            EngineError::Registration(RegistrationError::DuplicateAgent(_)) => ErrorCode::DuplicateAgent,
            EngineError::Registration(RegistrationError::UnknownRole(_)) => ErrorCode::UnknownRole,
            EngineError::Registration(RegistrationError::EmptyGrant(_)) => ErrorCode::EmptyGrant,
        };
        Self::new(code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.envelope())).into_response()
    }
}

/// The facade's operations, callable without HTTP.
#[derive(Debug, Clone)]
pub struct Api {
    engine: Arc<Engine>,
}

impl Api {
    pub fn new(engine: Arc<Engine>) -> Self {
        Self { engine }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn register(&self, req: &RegisterRequest) -> Result<RegisterResponse, ApiError> {
        let desc = req.to_descriptor()?;
        Ok(self.engine.register(desc)?.into())
    }

    pub fn query(&self, req: &QueryRequest) -> Result<QueryResponse, ApiError> {
        let token = SessionToken::from_string(req.token.as_str());
        let outcome = self.engine.enforce(&token, &req.query)?;
        Ok(QueryResponse::from(&outcome))
    }

    pub fn revoke(&self, req: &RevokeRequest) -> Result<RevokeResponse, ApiError> {
        let token = SessionToken::from_string(req.token.as_str());
        Ok(RevokeResponse {
            removed: self.engine.revoke(&token)?,
        })
    }

    pub fn audit(&self, req: &AuditRequest) -> Result<AuditResponse, ApiError> {
        let invalid = |m: String| ApiError::new(ErrorCode::InvalidRequest, m);
        let filter = AuditFilter {
            agent_id: req
                .agent_id
                .as_deref()
                .map(AgentId::new)
                .transpose()
                .map_err(|e| invalid(e.to_string()))?,
            event: req
                .event
                .as_deref()
                .map(str::parse::<AuditEvent>)
                .transpose()
                .map_err(invalid)?,
        };
        Ok(AuditResponse {
            records: self.engine.query_log(&filter).iter().map(AuditEntry::from).collect(),
        })
    }
}

fn decode<T: DeserializeOwned>(body: &str) -> Result<T, ApiError> {
    serde_json::from_str(body).map_err(|e| ApiError::new(ErrorCode::InvalidRequest, e.to_string()))
}

async fn register_handler(State(api): State<Api>, body: String) -> Result<Response, ApiError> {
    let resp = api.register(&decode(&body)?)?;
    Ok((StatusCode::CREATED, Json(resp)).into_response())
}

async fn query_handler(State(api): State<Api>, body: String) -> Result<Json<QueryResponse>, ApiError> {
    Ok(Json(api.query(&decode(&body)?)?))
}

async fn revoke_handler(State(api): State<Api>, body: String) -> Result<Json<RevokeResponse>, ApiError> {
    Ok(Json(api.revoke(&decode(&body)?)?))
}

async fn audit_handler(State(api): State<Api>, body: String) -> Result<Json<AuditResponse>, ApiError> {
    let req = if body.trim().is_empty() {
        AuditRequest::default()
    } else {
        decode(&body)?
    };
    Ok(Json(api.audit(&req)?))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/register", post(register_handler))
        .route("/query", post(query_handler))
        .route("/revoke", post(revoke_handler))
        .route("/audit", post(audit_handler))
        .route("/health", get(health))
        .with_state(Api::new(engine))
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(engine: Arc<Engine>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
