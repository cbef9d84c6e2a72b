use std::collections::VecDeque;
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use super::{ChatRequest, TokenUsage};

/// A failed call to the service.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ServiceError {
    pub message: String,
    /// Transport failures, 429 and 5xx are worth retrying; other 4xx are not.
    pub retryable: bool,
}

impl ServiceError {
    pub fn retryable(message: impl Into<String>) -> Self {
        ServiceError {
            message: message.into(),
            retryable: true,
        }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        ServiceError {
            message: message.into(),
            retryable: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendReply {
    pub text: String,
    pub usage: TokenUsage,
}

/// Something that answers chat requests.
pub trait ChatBackend {
    fn send(&mut self, request: &ChatRequest) -> Result<BackendReply, ServiceError>;
}

/// OpenAI-compatible `/chat/completions` over blocking HTTPS.
pub struct HttpBackend {
    url: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl HttpBackend {
    /// `endpoint` is either the full completions URL or a base such as
    /// `https://host/v1`, to which `/chat/completions` is appended.
    pub fn new(endpoint: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, ServiceError> {
        let endpoint = endpoint.trim_end_matches('/');
        let url = if endpoint.ends_with("/chat/completions") {
            endpoint.to_string()
        } else {
            format!("{endpoint}/chat/completions")
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ServiceError::fatal(format!("http client: {e}")))?;
        Ok(HttpBackend { url, api_key, http })
    }

    /// Reads `TBRL_LLM_ENDPOINT` and `TBRL_LLM_API_KEY`.
    pub fn from_env() -> Result<Self, ServiceError> {
        let endpoint =
            std::env::var("TBRL_LLM_ENDPOINT").map_err(|_| ServiceError::fatal("TBRL_LLM_ENDPOINT is not set"))?;
        let key = std::env::var("TBRL_LLM_API_KEY").ok();
        Self::new(&endpoint, key, Duration::from_secs(300))
    }
}

fn parse_completion(body: &Value) -> Result<BackendReply, ServiceError> {
    let text = body
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ServiceError::retryable("response has no choices[0].message.content"))?;
    let count = |field: &str| {
        body.pointer(&format!("/usage/{field}"))
            .and_then(Value::as_u64)
            .unwrap_or(0)
    };
    Ok(BackendReply {
        text: text.to_string(),
        usage: TokenUsage::new(count("prompt_tokens"), count("completion_tokens")),
    })
}

impl ChatBackend for HttpBackend {
    fn send(&mut self, request: &ChatRequest) -> Result<BackendReply, ServiceError> {
        let mut payload = json!({ "model": request.model, "messages": request.messages });
        if let Some(t) = request.temperature {
            payload["temperature"] = json!(t);
        }
        if let Some(m) = request.max_tokens {
            payload["max_tokens"] = json!(m);
        }
        let mut call = self.http.post(&self.url).json(&payload);
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let resp = call
            .send()
            .map_err(|e| ServiceError::retryable(format!("transport: {e}")))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| ServiceError::retryable(format!("reading body: {e}")))?;
        if !status.is_success() {
            let msg = format!(
                "HTTP {}: {}",
                status.as_u16(),
                text.chars().take(200).collect::<String>()
            );
            return Err(if status.is_server_error() || status.as_u16() == 429 {
                ServiceError::retryable(msg)
            } else {
                ServiceError::fatal(msg)
            });
        }
        let body: Value =
            serde_json::from_str(&text).map_err(|e| ServiceError::retryable(format!("malformed JSON: {e}")))?;
        parse_completion(&body)
    }
}

/// Replies from a fixed queue; an `Err` entry injects a failure.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    replies: VecDeque<Result<BackendReply, ServiceError>>,
    pub requests: Vec<ChatRequest>,
}

impl ScriptedBackend {
    pub fn new(replies: impl IntoIterator<Item = Result<BackendReply, ServiceError>>) -> Self {
        ScriptedBackend {
            replies: replies.into_iter().collect(),
            requests: Vec::new(),
        }
    }

    /// Text replies with usage derived from word counts.
    pub fn texts<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self::new(texts.into_iter().map(|t| {
            let text = t.into();
            Ok(BackendReply {
                usage: TokenUsage::new(0, word_count(&text)),
                text,
            })
        }))
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn send(&mut self, request: &ChatRequest) -> Result<BackendReply, ServiceError> {
        self.requests.push(request.clone());
        let mut reply = self
            .replies
            .pop_front()
            .unwrap_or_else(|| Err(ServiceError::fatal("scripted backend has no replies left")))?;
        if reply.usage.prompt_tokens == 0 {
            reply.usage.prompt_tokens = word_count(&request.prompt_text());
        }
        Ok(reply)
    }
}

/// Answers every request with a function of its prompt. Token usage is
/// the whitespace word count of prompt and reply, which keeps recorded
/// fixtures deterministic.
pub struct ResponderBackend<F> {
    respond: F,
}

impl<F> ResponderBackend<F>
where
    F: FnMut(&ChatRequest) -> String,
{
    pub fn new(respond: F) -> Self {
        ResponderBackend { respond }
    }
}

impl<F> ChatBackend for ResponderBackend<F>
where
    F: FnMut(&ChatRequest) -> String,
{
    fn send(&mut self, request: &ChatRequest) -> Result<BackendReply, ServiceError> {
        let text = (self.respond)(request);
        Ok(BackendReply {
            usage: TokenUsage::new(word_count(&request.prompt_text()), word_count(&text)),
            text,
        })
    }
}

fn word_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}
