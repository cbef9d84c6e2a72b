//! Chat-completion client with prompt templates, fenced-code extraction,
//! token accounting and record/replay cassettes.
//!
//! Live runs talk to an OpenAI-compatible endpoint configured through
//! `TBRL_LLM_ENDPOINT` and `TBRL_LLM_API_KEY`. Every exchange is numbered
//! and can be written to a JSONL cassette; replaying a cassette returns the
//! recorded responses in order after checking each request's hash, which
//! makes whole agent runs deterministic offline.

mod backend;
mod cassette;
mod client;
mod extract;
mod template;
mod usage;

use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use backend::{BackendReply, ChatBackend, HttpBackend, ResponderBackend, ScriptedBackend, ServiceError};
pub use cassette::{Cassette, CassetteMeta, CassetteRecord, CassetteWriter};
pub use client::{LlmClient, LlmConfig, RetryPolicy};
pub use extract::{extract_code_blocks, extract_code_blocks_any};
pub use template::{few_shot_examples, utils_text, PromptTemplate, TemplateName};
pub use usage::{usage_total, UsageSummary};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("template `{template}` is missing a binding for {{{placeholder}}}")]
    MissingPlaceholder { template: String, placeholder: String },
    #[error("language-model service failed after {attempts} attempt(s): {message}")]
    Service { attempts: u32, message: String },
    #[error("cassette mismatch at exchange {seq}: recorded request {expected}, got {found}")]
    CassetteMismatch { seq: u64, expected: String, found: String },
    #[error("cassette exhausted after {consumed} exchange(s)")]
    CassetteExhausted { consumed: usize },
    #[error("cassette: {0}")]
    Cassette(String),
    #[error("client configuration: {0}")]
    Config(String),
}

/// What an exchange was for; token usage is reported per purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    /// Domain and problem synthesis from scratch.
    AbstractionSynthesis,
    /// Problem-only synthesis against a reused domain.
    ProblemSynthesis,
    ClassifierSynthesis,
    WorldModelSynthesis,
    Revision,
}

impl Purpose {
    pub const ALL: [Purpose; 5] = [
        Purpose::AbstractionSynthesis,
        Purpose::ProblemSynthesis,
        Purpose::ClassifierSynthesis,
        Purpose::WorldModelSynthesis,
        Purpose::Revision,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Purpose::AbstractionSynthesis => "abstraction_synthesis",
            Purpose::ProblemSynthesis => "problem_synthesis",
            Purpose::ClassifierSynthesis => "classifier_synthesis",
            Purpose::WorldModelSynthesis => "world_model_synthesis",
            Purpose::Revision => "revision",
        }
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Purpose {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Purpose::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown purpose `{s}`"))
    }
}

/// Token counts as reported by the service.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        TokenUsage {
            prompt_tokens,
            completion_tokens,
        }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage::new(
            self.prompt_tokens + rhs.prompt_tokens,
            self.completion_tokens + rhs.completion_tokens,
        )
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl ChatRequest {
    /// SHA-256 over the messages only, so sampling tweaks keep cassettes valid.
    pub fn hash(&self) -> String {
        let payload = serde_json::to_vec(&self.messages).expect("messages serialize");
        hex::encode(Sha256::digest(&payload))
    }

    /// Concatenated message contents, handy for scripted responders.
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// One request/response pair with its accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionExchange {
    pub seq: u64,
    pub purpose: Purpose,
    /// Level the exchange belongs to (`family/name`).
    pub level: String,
    pub request_hash: String,
    pub request: ChatRequest,
    pub response: String,
    pub usage: TokenUsage,
    /// Service round-trip time. Not part of any deterministic report.
    #[serde(default)]
    pub latency_ms: u64,
    /// Attempts made, including failed ones that were retried.
    #[serde(default = "one")]
    pub attempts: u32,
}

fn one() -> u32 {
    1
}
