use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{
    usage_total, Cassette, CassetteWriter, ChatBackend, ChatMessage, ChatRequest, CompletionExchange, LlmError,
    Purpose, UsageSummary,
};

/// Bounded exponential backoff for retryable service errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_delay_ms: 500,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, failed_attempts: u32) -> Duration {
        let factor = 1u64 << failed_attempts.saturating_sub(1).min(16);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub model: String,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub retry: RetryPolicy,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            model: "gpt-4o".into(),
            temperature: None,
            max_tokens: None,
            retry: RetryPolicy::default(),
        }
    }
}

enum Mode {
    Live(Box<dyn ChatBackend>),
    Replay { cassette: Cassette, cursor: usize },
}

/// Serializes exchanges for one run and keeps their log.
pub struct LlmClient {
    mode: Mode,
    config: LlmConfig,
    log: Vec<CompletionExchange>,
    writer: Option<CassetteWriter>,
}

impl LlmClient {
    pub fn live(backend: Box<dyn ChatBackend>, config: LlmConfig) -> Self {
        LlmClient {
            mode: Mode::Live(backend),
            config,
            log: Vec::new(),
            writer: None,
        }
    }

    pub fn replay(cassette: Cassette, config: LlmConfig) -> Self {
        LlmClient {
            mode: Mode::Replay { cassette, cursor: 0 },
            config,
            log: Vec::new(),
            writer: None,
        }
    }

    /// Also appends every exchange to `writer`.
    pub fn recording(mut self, writer: CassetteWriter) -> Self {
        self.writer = Some(writer);
        self
    }

    pub fn is_replay(&self) -> bool {
        matches!(self.mode, Mode::Replay { .. })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn log(&self) -> &[CompletionExchange] {
        &self.log
    }

    pub fn usage(&self) -> UsageSummary {
        usage_total(&self.log)
    }

    /// Sends a single user message.
    pub fn complete(&mut self, purpose: Purpose, level: &str, prompt: &str) -> Result<CompletionExchange, LlmError> {
        let request = ChatRequest {
            model: self.config.model.clone(),
            messages: vec![ChatMessage::user(prompt)],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        self.complete_request(purpose, level, request)
    }

    pub fn complete_request(
        &mut self,
        purpose: Purpose,
        level: &str,
        request: ChatRequest,
    ) -> Result<CompletionExchange, LlmError> {
        let seq = self.log.len() as u64;
        let request_hash = request.hash();
        let exchange = match &mut self.mode {
            Mode::Replay { cassette, cursor } => {
                let Some(rec) = cassette.exchanges.get(*cursor) else {
                    return Err(LlmError::CassetteExhausted { consumed: *cursor });
                };
                if rec.request_hash != request_hash {
                    return Err(LlmError::CassetteMismatch {
                        seq,
                        expected: rec.request_hash.clone(),
                        found: request_hash,
                    });
                }
                *cursor += 1;
                CompletionExchange {
                    seq,
                    purpose,
                    level: level.to_string(),
                    request_hash,
                    request,
                    response: rec.response.clone(),
                    usage: rec.usage,
                    latency_ms: rec.latency_ms,
                    attempts: rec.attempts,
                }
            }
            Mode::Live(backend) => {
                let policy = self.config.retry;
                let mut attempts = 0;
                loop {
                    attempts += 1;
                    let started = Instant::now();
                    match backend.send(&request) {
                        Ok(reply) => {
                            break CompletionExchange {
                                seq,
                                purpose,
                                level: level.to_string(),
                                request_hash,
                                request,
                                response: reply.text,
                                usage: reply.usage,
                                latency_ms: started.elapsed().as_millis() as u64,
                                attempts,
                            };
                        }
                        Err(e) => {
                            tracing::warn!(seq, attempt = attempts, retryable = e.retryable, error = %e, "completion attempt failed");
                            if !e.retryable || attempts >= policy.max_attempts.max(1) {
                                return Err(LlmError::Service {
                                    attempts,
                                    message: e.message,
                                });
                            }
                            std::thread::sleep(policy.delay(attempts));
                        }
                    }
                }
            }
        };
        tracing::debug!(seq, %purpose, level, tokens = exchange.usage.total(), "exchange");
        if let Some(w) = self.writer.as_mut() {
            w.append(&exchange)?;
        }
        self.log.push(exchange.clone());
        Ok(exchange)
    }

    /// Closes the recording, if any, with its summary line.
    pub fn finish(&mut self) -> Result<(), LlmError> {
        if let Some(w) = self.writer.take() {
            w.finish(&self.config.model)?;
        }
        Ok(())
    }
}
