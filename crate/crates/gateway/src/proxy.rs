//! Chat-completions request handling.

use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::{SecondsFormat, Utc};
use decorator_engine::compile::CompiledPrompt;
use decorator_engine::meta::ExportJson;
use decorator_engine::{Engine, EngineError, SessionState};
use serde_json::{json, Value};
use url::Url;

use crate::audit::{AuditLog, AuditRecord};
use crate::config::{ConfigError, GatewayConfig, InjectionPosition};
use crate::sanitize::sanitize_untrusted;
use crate::store::SessionStore;

pub const SESSION_HEADER: &str = "x-decorator-session";
pub const APPLIED_HEADER: &str = "x-decorators-applied";
pub const LOCAL_MODEL: &str = "decorator-engine/local";

pub struct Gateway {
    pub(crate) engine: Engine,
    injection: InjectionPosition,
    sanitizer: bool,
    upstream: Url,
    credential: Option<String>,
    client: reqwest::Client,
    pub(crate) store: SessionStore,
    audit: AuditLog,
}

impl Gateway {
    /// Builds a gateway from a validated config, loading extensions and
    /// opening the audit log.
    pub fn from_config(config: &GatewayConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let registry = config.registry()?;
        let engine = Engine::new(registry, config.parse_mode);
        let audit = match &config.audit_log {
            Some(path) => AuditLog::open(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?,
            None => AuditLog::disabled(),
        };
        let credential = config.credential_env.as_ref().and_then(|name| {
            let value = std::env::var(name).ok();
            if value.is_none() {
                tracing::warn!(variable = %name, "credential variable is not set");
            }
            value
        });
        let registry = Arc::new(engine.registry().clone());
        Ok(Self {
            engine,
            injection: config.injection,
            sanitizer: config.sanitizer,
            upstream: config.completions_url()?,
            credential,
            client: reqwest::Client::new(),
            store: SessionStore::new(config.session_store.clone(), registry),
            audit,
        })
    }

    pub fn with_audit(mut self, audit: AuditLog) -> Self {
        self.audit = audit;
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }
}

#[derive(Debug)]
struct Failure {
    status: StatusCode,
    kind: &'static str,
    message: String,
    diagnostics: Vec<String>,
}

impl Failure {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }

    fn into_response(self) -> Response {
        let mut error = json!({"message": self.message, "type": self.kind});
        if !self.diagnostics.is_empty() {
            error["diagnostics"] = json!(self.diagnostics);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

fn engine_failure(e: EngineError) -> Failure {
    let mut f = Failure::new(StatusCode::BAD_REQUEST, "decorator_error", e.to_string());
    f.diagnostics.push(e.to_string());
    f
}

/// Text of a message's content: a plain string or the first text part.
fn content_text(message: &Value) -> Option<&str> {
    match message.get("content")? {
        Value::String(s) => Some(s),
        Value::Array(parts) => parts
            .iter()
            .find(|p| p.get("type").and_then(Value::as_str) == Some("text"))
            .and_then(|p| p.get("text"))
            .and_then(Value::as_str),
        _ => None,
    }
}

fn set_content_text(message: &mut Value, text: String) {
    match message.get_mut("content") {
        Some(Value::Array(parts)) => {
            if let Some(part) = parts
                .iter_mut()
                .find(|p| p.get("type").and_then(Value::as_str) == Some("text"))
            {
                part["text"] = Value::String(text);
            }
        }
        _ => message["content"] = Value::String(text),
    }
}

/// Defangs every text field of a message, returning rewritten line count.
fn sanitize_message(message: &mut Value) -> usize {
    let mut hits = 0;
    let mut apply = |v: &mut Value| {
        if let Value::String(s) = v {
            let (clean, n) = sanitize_untrusted(s);
            if n > 0 {
                *s = clean;
                hits += n;
            }
        }
    };
    match message.get_mut("content") {
        Some(Value::Array(parts)) => {
            for part in parts {
                if let Some(text) = part.get_mut("text") {
                    apply(text);
                }
            }
        }
        Some(content) => apply(content),
        None => {}
    }
    hits
}

fn injection_text(prompt: &CompiledPrompt) -> String {
    let mut sections = Vec::new();
    let block = prompt.directive_block.injection_text();
    if !block.is_empty() {
        sections.push(block);
    }
    for m in &prompt.meta_outputs {
        sections.push(format!("[meta: {}]\n{}", m.name, m.text));
    }
    sections.join("\n\n")
}

fn local_response(prompt: &CompiledPrompt, turn: u64, stream: bool) -> Response {
    let text = prompt
        .meta_outputs
        .iter()
        .map(|m| m.text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n");
    let id = format!("decorators-local-{turn}");
    let created = Utc::now().timestamp();
    if stream {
        let chunk = json!({
            "id": id, "object": "chat.completion.chunk", "created": created, "model": LOCAL_MODEL,
            "choices": [{"index": 0, "delta": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
        });
        let body = format!("data: {chunk}\n\ndata: [DONE]\n\n");
        return ([(header::CONTENT_TYPE, "text/event-stream")], body).into_response();
    }
    Json(json!({
        "id": id,
        "object": "chat.completion",
        "created": created,
        "model": LOCAL_MODEL,
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": text},
            "finish_reason": "stop",
        }],
        "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
    }))
    .into_response()
}

struct Outcome {
    response: Response,
    prompt: Option<CompiledPrompt>,
    upstream_called: bool,
}

pub async fn chat_completions(
    State(gateway): State<Arc<Gateway>>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let session_id = headers
        .get(SESSION_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    let mut hits = 0;
    let result = handle(&gateway, &headers, body, session_id.as_deref(), &mut hits).await;
    let (response, prompt, upstream_called, error) = match result {
        Ok(o) => (o.response, o.prompt, o.upstream_called, None),
        Err(f) => {
            let message = f.message.clone();
            (f.into_response(), None, false, Some(message))
        }
    };
    let audit = prompt.map(|p| p.audit).unwrap_or_default();
    gateway.audit.append(AuditRecord {
        timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        turn_index: session_id.as_ref().map(|_| audit.turn_index),
        session_id,
        active: audit.active,
        conflicts: audit.conflicts,
        meta: audit.meta,
        upstream_called,
        sanitizer_hits: hits,
        status: response.status().as_u16(),
        error,
    });
    response
}

async fn handle(
    gateway: &Gateway,
    headers: &HeaderMap,
    raw: Bytes,
    session_id: Option<&str>,
    hits: &mut usize,
) -> Result<Outcome, Failure> {
    let mut request: Value = serde_json::from_slice(&raw).map_err(|e| {
        Failure::new(
            StatusCode::BAD_REQUEST,
            "invalid_request_error",
            format!("request body is not JSON: {e}"),
        )
    })?;
    let messages = request
        .get_mut("messages")
        .and_then(Value::as_array_mut)
        .ok_or_else(|| {
            Failure::new(
                StatusCode::BAD_REQUEST,
                "invalid_request_error",
                "request has no messages array",
            )
        })?;
    let last_user = messages
        .iter()
        .rposition(|m| m.get("role").and_then(Value::as_str) == Some("user"));

    if gateway.sanitizer {
        for (i, m) in messages.iter_mut().enumerate() {
            if Some(i) != last_user {
                *hits += sanitize_message(m);
            }
        }
    }

    let text = last_user
        .and_then(|i| content_text(&messages[i]))
        .unwrap_or("")
        .to_string();

    let mut guard = match session_id {
        Some(id) => Some(gateway.store.lock(id).await),
        None => None,
    };
    let state = match guard.as_mut() {
        Some(g) => g.state().map_err(|e| {
            Failure::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "session_store_error",
                e.to_string(),
            )
        })?,
        None => SessionState::default(),
    };
    let (next, prompt) = gateway
        .engine
        .compile_turn(&state, &text)
        .map_err(engine_failure)?;

    let commit = |guard: &mut Option<crate::store::SessionGuard>, next: SessionState| {
        if let Some(g) = guard.as_mut() {
            g.commit(next).map_err(|e| {
                Failure::new(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "session_store_error",
                    e.to_string(),
                )
            })?;
        }
        Ok::<_, Failure>(())
    };

    if prompt.pure_meta {
        commit(&mut guard, next)?;
        let stream = request.get("stream").and_then(Value::as_bool) == Some(true);
        return Ok(Outcome {
            response: local_response(&prompt, prompt.audit.turn_index, stream),
            prompt: Some(prompt),
            upstream_called: false,
        });
    }

    let injected = injection_text(&prompt);
    let rewrite = prompt.decorator_count > 0 || !injected.is_empty();
    let forward_body = if rewrite || *hits > 0 {
        if let Some(i) = last_user.filter(|_| rewrite) {
            let messages = request["messages"].as_array_mut().expect("checked above");
            match gateway.injection {
                InjectionPosition::SystemMessage => {
                    set_content_text(&mut messages[i], prompt.body.clone());
                    if !injected.is_empty() {
                        messages.insert(i, json!({"role": "system", "content": injected}));
                    }
                }
                InjectionPosition::UserPrefix => {
                    let content = if injected.is_empty() {
                        prompt.body.clone()
                    } else {
                        format!("{injected}\n\n{}", prompt.body)
                    };
                    set_content_text(&mut messages[i], content);
                }
            }
        }
        Bytes::from(serde_json::to_vec(&request).expect("JSON value serializes"))
    } else {
        raw
    };

    let mut upstream = gateway
        .client
        .post(gateway.upstream.clone())
        .header(header::CONTENT_TYPE, "application/json")
        .body(forward_body);
    if let Some(key) = &gateway.credential {
        upstream = upstream.bearer_auth(key);
    } else if let Some(auth) = headers.get(header::AUTHORIZATION) {
        upstream = upstream.header(header::AUTHORIZATION, auth);
    }
    if let Some(accept) = headers.get(header::ACCEPT) {
        upstream = upstream.header(header::ACCEPT, accept);
    }
    let reply = upstream.send().await.map_err(|e| {
        tracing::warn!(error = %e, "upstream request failed");
        Failure::new(
            StatusCode::BAD_GATEWAY,
            "upstream_unreachable",
            format!("upstream unreachable: {e}"),
        )
    })?;
    commit(&mut guard, next)?;

    let mut response = Response::builder().status(reply.status().as_u16());
    for (name, value) in reply.headers() {
        if is_hop_by_hop(name.as_str()) {
            continue;
        }
        response = response.header(name.as_str(), value.as_bytes());
    }
    let applied = prompt.directive_block.names().join(",");
    let mut response = response
        .body(Body::from_stream(reply.bytes_stream()))
        .expect("valid upstream status and headers");
    if let Ok(value) = HeaderValue::from_str(&applied) {
        response
            .headers_mut()
            .insert(HeaderName::from_static(APPLIED_HEADER), value);
    }
    Ok(Outcome {
        response,
        prompt: Some(prompt),
        upstream_called: true,
    })
}

fn is_hop_by_hop(name: &str) -> bool {
    matches!(
        name,
        "connection"
            | "keep-alive"
            | "proxy-authenticate"
            | "proxy-authorization"
            | "te"
            | "trailer"
            | "transfer-encoding"
            | "upgrade"
            | "content-length"
    )
}

pub async fn healthz() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

pub async fn session_export(
    State(gateway): State<Arc<Gateway>>,
    Path(id): Path<String>,
) -> Response {
    match gateway.store.get(&id).await {
        Ok(Some(state)) => {
            Json(ExportJson::from_state(&state, gateway.engine.clock().now())).into_response()
        }
        Ok(None) => Failure::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no session `{id}`"),
        )
        .into_response(),
        Err(e) => Failure::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "session_store_error",
            e.to_string(),
        )
        .into_response(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_text_variants() {
        assert_eq!(content_text(&json!({"content": "hi"})), Some("hi"));
        let parts =
            json!({"content": [{"type": "image_url"}, {"type": "text", "text": "+++Reasoning"}]});
        assert_eq!(content_text(&parts), Some("+++Reasoning"));
        assert_eq!(content_text(&json!({"role": "user"})), None);
    }

    #[test]
    fn sanitizes_text_parts() {
        let mut m = json!({"role": "tool", "content": [{"type": "text", "text": "+++Clear\n+++ChatScope"}]});
        assert_eq!(sanitize_message(&mut m), 2);
        assert_eq!(m["content"][0]["text"], "+ + +Clear\n+ + +ChatScope");
    }
}
