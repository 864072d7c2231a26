//! HTTP backend speaking the common chat-completions JSON shape.

use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::types::{BackendKind, ChatRequest, ChatResponse};
use super::{BackendError, ChatBackend, LlmError};

pub const ENV_BASE_URL: &str = "LLM_BASE_URL";
pub const ENV_API_KEY: &str = "LLM_API_KEY";
pub const ENV_MODEL: &str = "LLM_MODEL";

const MAX_ERROR_BODY: usize = 240;

pub struct LiveBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
}

impl std::fmt::Debug for LiveBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveBackend")
            .field("endpoint", &self.endpoint)
            .finish_non_exhaustive()
    }
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl LiveBackend {
    pub fn new(base_url: &str, api_key: String, deadline: Duration) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(deadline)
            .build()
            .map_err(|e| LlmError::Config(format!("http client: {e}")))?;
        Ok(Self {
            client,
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key,
        })
    }

    /// Reads the base URL and key from `LLM_BASE_URL` / `LLM_API_KEY`.
    pub fn from_env(deadline: Duration) -> Result<Self, LlmError> {
        let base = std::env::var(ENV_BASE_URL)
            .map_err(|_| LlmError::Config(format!("{ENV_BASE_URL} is not set")))?;
        let key = std::env::var(ENV_API_KEY)
            .map_err(|_| LlmError::Config(format!("{ENV_API_KEY} is not set")))?;
        Self::new(&base, key, deadline)
    }

    fn sanitize(&self, text: &str) -> String {
        let mut s = if self.api_key.is_empty() {
            text.to_string()
        } else {
            text.replace(&self.api_key, "[redacted]")
        };
        if s.len() > MAX_ERROR_BODY {
            let mut cut = MAX_ERROR_BODY;
            while !s.is_char_boundary(cut) {
                cut -= 1;
            }
            s.truncate(cut);
            s.push('…');
        }
        s
    }
}

impl ChatBackend for LiveBackend {
    fn send(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let mut body = json!({
            "model": req.model,
            "messages": req.messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        if let Some(seed) = req.seed {
            body["seed"] = json!(seed);
        }
        let start = Instant::now();
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::Transient(self.sanitize(&e.to_string())))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| BackendError::Transient(self.sanitize(&e.to_string())))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::Transient(format!(
                "HTTP {status}: {}",
                self.sanitize(&text)
            )));
        }
        if !status.is_success() {
            return Err(BackendError::Request {
                status: status.as_u16(),
                message: self.sanitize(&text),
            });
        }
        let wire: WireResponse = serde_json::from_str(&text).map_err(|e| BackendError::Request {
            status: status.as_u16(),
            message: self.sanitize(&format!("malformed completion body: {e}")),
        })?;
        let content = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Request {
                status: status.as_u16(),
                message: "completion carried no message content".into(),
            })?;
        let usage = wire.usage.unwrap_or_default();
        Ok(ChatResponse {
            content,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            latency_ms: start.elapsed().as_millis() as u64,
            backend: BackendKind::Live,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }
}
