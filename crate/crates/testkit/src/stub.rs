//! A counting chat-completions upstream for gateway tests.

use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::HeaderMap;
use axum::routing::post;
use axum::Router;

pub const STUB_REPLY: &str = r#"{"id":"stub-1","object":"chat.completion","model":"stub","choices":[{"index":0,"message":{"role":"assistant","content":"stub reply"},"finish_reason":"stop"}]}"#;

#[derive(Debug, Clone)]
pub struct Captured {
    pub body: Bytes,
    pub headers: HeaderMap,
}

#[derive(Default)]
pub struct StubUpstream {
    requests: Mutex<Vec<Captured>>,
}

impl StubUpstream {
    pub fn calls(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<Captured> {
        self.requests.lock().unwrap().clone()
    }

    pub fn last_json(&self) -> serde_json::Value {
        let body = self
            .requests
            .lock()
            .unwrap()
            .last()
            .expect("no upstream call")
            .body
            .clone();
        serde_json::from_slice(&body).expect("upstream got JSON")
    }
}

async fn record(
    State(stub): State<Arc<StubUpstream>>,
    headers: HeaderMap,
    body: Bytes,
) -> ([(&'static str, &'static str); 1], &'static str) {
    stub.requests
        .lock()
        .unwrap()
        .push(Captured { body, headers });
    ([("content-type", "application/json")], STUB_REPLY)
}

/// Starts the stub on an ephemeral port; returns its `/v1` base URL.
pub async fn spawn_stub() -> (String, Arc<StubUpstream>) {
    let stub = Arc::new(StubUpstream::default());
    let app = Router::new()
        .route("/v1/chat/completions", post(record))
        .with_state(stub.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    (format!("http://{addr}/v1"), stub)
}
