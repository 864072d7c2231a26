//! Chat-completion gateway.
//!
//! [`Gateway`] wraps a [`ChatBackend`] (live HTTP or fixture mock) with
//! retries, a concurrency bound, call logging and per-tag token accounting.
//! Structured replies are pulled from the first fenced block and validated
//! against a typed schema; one repair request is issued before giving up.

mod live;
mod mock;
mod structured;
mod types;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use live::{LiveBackend, ENV_API_KEY, ENV_BASE_URL, ENV_MODEL};
pub use mock::{canonical_hash, normalize_whitespace, Fixture, MockBackend, BUILTIN_FIXTURES};
pub use structured::{first_block, parse_structured, repair_instruction, StructuredOutput, SCHEMA_NAMES};
pub use types::{BackendKind, ChatMessage, ChatRequest, ChatResponse, Role};

use crate::util::Semaphore;

/// Backend failure classes; only `Transient` is retried.
#[derive(Debug, Clone, thiserror::Error)]
pub enum BackendError {
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("request rejected (HTTP {status}): {message}")]
    Request { status: u16, message: String },
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum LlmError {
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("request error (HTTP {status}): {message}")]
    Request { status: u16, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("structured output for schema '{schema}' invalid after repair: {reason}")]
    Structured {
        schema: String,
        reason: String,
        raw: String,
    },
    #[error("gateway configuration: {0}")]
    Config(String),
}

pub trait ChatBackend: Send + Sync {
    fn send(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError>;
    fn kind(&self) -> BackendKind;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub parallelism: usize,
    pub deadline_secs: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            model: "default".into(),
            temperature: 0.2,
            max_tokens: 2048,
            max_retries: 3,
            backoff_base_ms: 500,
            parallelism: 8,
            deadline_secs: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }

    fn add(&mut self, resp: &ChatResponse) {
        self.calls += 1;
        self.prompt_tokens += resp.prompt_tokens;
        self.completion_tokens += resp.completion_tokens;
    }
}

/// Token usage keyed by request tag.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageLedger {
    pub per_tag: BTreeMap<String, TokenUsage>,
}

impl UsageLedger {
    pub fn shared() -> Arc<Mutex<UsageLedger>> {
        Arc::new(Mutex::new(UsageLedger::default()))
    }

    pub fn record(&mut self, tag: &str, resp: &ChatResponse) {
        self.per_tag.entry(tag.to_string()).or_default().add(resp);
    }

    pub fn total(&self) -> TokenUsage {
        self.per_tag.values().fold(TokenUsage::default(), |mut acc, u| {
            acc.calls += u.calls;
            acc.prompt_tokens += u.prompt_tokens;
            acc.completion_tokens += u.completion_tokens;
            acc
        })
    }

    /// Usage summed over tags starting with `prefix`.
    pub fn for_prefix(&self, prefix: &str) -> TokenUsage {
        self.per_tag
            .iter()
            .filter(|(t, _)| t.starts_with(prefix))
            .fold(TokenUsage::default(), |mut acc, (_, u)| {
                acc.calls += u.calls;
                acc.prompt_tokens += u.prompt_tokens;
                acc.completion_tokens += u.completion_tokens;
                acc
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub tag: String,
    pub hash: String,
    pub attempts: u32,
    pub ok: bool,
}

struct Inner {
    backend: Box<dyn ChatBackend>,
    config: GatewayConfig,
    permits: Semaphore,
    log: Mutex<Vec<CallRecord>>,
    usage: Mutex<UsageLedger>,
}

/// Shareable handle; clones see the same backend, log and global usage.
#[derive(Clone)]
pub struct Gateway {
    inner: Arc<Inner>,
    ledgers: Vec<Arc<Mutex<UsageLedger>>>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.inner.backend.kind())
            .field("config", &self.inner.config)
            .finish()
    }
}

impl Gateway {
    pub fn new(backend: impl ChatBackend + 'static, config: GatewayConfig) -> Self {
        let permits = Semaphore::new(config.parallelism);
        Self {
            inner: Arc::new(Inner {
                backend: Box::new(backend),
                config,
                permits,
                log: Mutex::new(Vec::new()),
                usage: Mutex::new(UsageLedger::default()),
            }),
            ledgers: Vec::new(),
        }
    }

    pub fn mock(fixtures: Vec<Fixture>) -> Self {
        Self::new(MockBackend::new(fixtures), GatewayConfig::default())
    }

    /// Mock gateway over the bundled fixtures.
    pub fn mock_builtin(config: GatewayConfig) -> Self {
        Self::new(MockBackend::builtin(), config)
    }

    pub fn mock_from_dir(dir: &Path, config: GatewayConfig) -> Result<Self, LlmError> {
        Ok(Self::new(MockBackend::from_dir(dir)?, config))
    }

    /// Live backend from `LLM_BASE_URL` / `LLM_API_KEY`; `LLM_MODEL`
    /// overrides the configured model when set.
    pub fn live_from_env(mut config: GatewayConfig) -> Result<Self, LlmError> {
        if let Ok(model) = std::env::var(ENV_MODEL) {
            config.model = model;
        }
        let backend = LiveBackend::from_env(Duration::from_secs(config.deadline_secs))?;
        Ok(Self::new(backend, config))
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.inner.config
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.inner.backend.kind()
    }

    /// A handle that additionally records usage into `ledger`.
    pub fn with_ledger(&self, ledger: Arc<Mutex<UsageLedger>>) -> Gateway {
        let mut g = self.clone();
        g.ledgers.push(ledger);
        g
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.inner.log.lock().expect("log poisoned").clone()
    }

    pub fn usage(&self) -> UsageLedger {
        self.inner.usage.lock().expect("usage poisoned").clone()
    }

    fn fill_defaults(&self, mut req: ChatRequest) -> ChatRequest {
        let c = &self.inner.config;
        if req.model.is_empty() {
            req.model = c.model.clone();
        }
        if req.temperature < 0.0 {
            req.temperature = c.temperature;
        }
        if req.max_tokens == 0 {
            req.max_tokens = c.max_tokens;
        }
        req
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.inner.config.backoff_base_ms;
        let exp = base.saturating_mul(1u64 << attempt.min(10));
        let jitter = if base > 0 {
            rand::thread_rng().gen_range(0..=base / 2)
        } else {
            0
        };
        Duration::from_millis(exp + jitter)
    }

    pub fn complete(&self, req: ChatRequest) -> Result<ChatResponse, LlmError> {
        let req = self.fill_defaults(req);
        req.validate().map_err(LlmError::InvalidRequest)?;
        let hash = canonical_hash(&req);
        let max_attempts = self.inner.config.max_retries + 1;

        let _permit = self.inner.permits.acquire();
        let mut attempt = 0;
        let result = loop {
            attempt += 1;
            match self.inner.backend.send(&req) {
                Ok(resp) => break Ok(resp),
                Err(BackendError::Transient(msg)) if attempt < max_attempts => {
                    tracing::warn!(tag = %req.tag, attempt, "transient LLM failure: {msg}");
                    std::thread::sleep(self.backoff(attempt - 1));
                }
                Err(BackendError::Transient(message)) => {
                    break Err(LlmError::Transport {
                        attempts: attempt,
                        message,
                    })
                }
                Err(BackendError::Request { status, message }) => {
                    break Err(LlmError::Request { status, message })
                }
            }
        };

        self.inner.log.lock().expect("log poisoned").push(CallRecord {
            tag: req.tag.clone(),
            hash,
            attempts: attempt,
            ok: result.is_ok(),
        });
        if let Ok(resp) = &result {
            self.inner.usage.lock().expect("usage poisoned").record(&req.tag, resp);
            for l in &self.ledgers {
                l.lock().expect("ledger poisoned").record(&req.tag, resp);
            }
        }
        result
    }

    /// Parses `resp` as `T`; on failure asks once for a corrected reply.
    pub fn extract_structured<T: StructuredOutput>(
        &self,
        req: &ChatRequest,
        resp: &ChatResponse,
    ) -> Result<T, LlmError> {
        match parse_structured::<T>(&resp.content) {
            Ok(v) => Ok(v),
            Err(first_reason) => {
                tracing::debug!(tag = %req.tag, "structured output rejected: {first_reason}");
                let mut messages = req.messages.clone();
                messages.push(ChatMessage::assistant(resp.content.clone()));
                messages.push(ChatMessage::user(repair_instruction::<T>()));
                let repair = ChatRequest {
                    messages,
                    tag: format!("{}:repair", req.tag),
                    ..req.clone()
                };
                let second = self.complete(repair)?;
                parse_structured::<T>(&second.content).map_err(|reason| LlmError::Structured {
                    schema: T::SCHEMA.to_string(),
                    reason,
                    raw: second.content,
                })
            }
        }
    }

    pub fn complete_structured<T: StructuredOutput>(
        &self,
        req: ChatRequest,
    ) -> Result<(T, ChatResponse), LlmError> {
        let req = self.fill_defaults(req);
        let resp = self.complete(req.clone())?;
        let value = self.extract_structured::<T>(&req, &resp)?;
        Ok((value, resp))
    }
}
