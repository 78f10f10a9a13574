//! Chat-completions transport and an offline scripted stand-in.
//!
//! Nothing else in the crate touches the network; everything that needs a
//! model goes through [`LlmClient`].

use std::fmt;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Environment variable holding the API key.
pub const KEY_ENV: &str = "METAEVOLVE_LLM_KEY";

const EXCERPT_CHARS: usize = 200;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("llm configuration: {0}")]
    Config(String),
    #[error("credential rejected (HTTP {status})")]
    Credential { status: u16 },
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("unexpected response: {message}; body starts {excerpt:?}")]
    Protocol { message: String, excerpt: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model: String,
    pub system_message: String,
    pub user_message: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl LlmRequest {
    pub fn new(model: impl Into<String>, system: impl Into<String>, user: impl Into<String>) -> Self {
        LlmRequest {
            model: model.into(),
            system_message: system.into(),
            user_message: user.into(),
            temperature: 0.7,
            max_tokens: 4096,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.system_message.is_empty() && self.user_message.is_empty() {
            return Err(LlmError::InvalidRequest("both messages are empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Chat-completions request body.
    pub fn wire_body(&self) -> Value {
        let mut messages = Vec::new();
        if !self.system_message.is_empty() {
            messages.push(json!({"role": "system", "content": self.system_message}));
        }
        if !self.user_message.is_empty() {
            messages.push(json!({"role": "user", "content": self.user_message}));
        }
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub usage: Option<Usage>,
    pub latency_ms: u64,
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError>;
}

/// The `[llm]` table of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    /// Full chat-completions URL, or a base URL to which
    /// `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub retries: u32,
    /// First backoff delay; doubles on each retry.
    pub backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: String::new(),
            model: String::new(),
            temperature: 0.7,
            max_tokens: 4096,
            timeout_secs: 120,
            retries: 3,
            backoff_ms: 1000,
        }
    }
}

impl LlmConfig {
    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Blocking HTTP client for chat-completions endpoints.
pub struct HttpClient {
    config: LlmConfig,
    key: String,
    agent: ureq::Agent,
}

impl fmt::Debug for HttpClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpClient")
            .field("config", &self.config)
            .field("key", &"<redacted>")
            .finish()
    }
}

enum Attempt {
    Done(LlmResponse),
    Retry(String),
    Fatal(LlmError),
}

fn excerpt(body: &str) -> String {
    body.chars().take(EXCERPT_CHARS).collect()
}

fn parse_body(body: &str) -> Result<(String, Option<Usage>), LlmError> {
    let protocol = |message: &str| LlmError::Protocol {
        message: message.to_string(),
        excerpt: excerpt(body),
    };
    let v: Value = serde_json::from_str(body).map_err(|e| protocol(&format!("invalid JSON: {e}")))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| protocol("missing choices[0].message.content"))?;
    let usage = v.get("usage").and_then(|u| {
        Some(Usage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
        })
    });
    Ok((text.to_string(), usage))
}

impl HttpClient {
    pub fn new(config: LlmConfig, key: impl Into<String>) -> Result<Self, LlmError> {
        if config.endpoint.is_empty() {
            return Err(LlmError::Config("llm.endpoint is not set".into()));
        }
        if config.model.is_empty() {
            return Err(LlmError::Config("llm.model is not set".into()));
        }
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build();
        Ok(HttpClient {
            config,
            key: key.into(),
            agent: ureq::Agent::new_with_config(agent_config),
        })
    }

    /// Reads the key from [`KEY_ENV`].
    pub fn from_env(config: LlmConfig) -> Result<Self, LlmError> {
        let key = std::env::var(KEY_ENV).map_err(|_| LlmError::Config(format!("{KEY_ENV} is not set")))?;
        HttpClient::new(config, key)
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// A request with this client's model and sampling settings.
    pub fn request(&self, system: impl Into<String>, user: impl Into<String>) -> LlmRequest {
        LlmRequest {
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
            ..LlmRequest::new(self.config.model.clone(), system, user)
        }
    }

    fn attempt(&self, body: &Value, started: Instant) -> Attempt {
        let sent = self
            .agent
            .post(&self.config.url())
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(body);
        let mut response = match sent {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        match status {
            200..=299 => match parse_body(&text) {
                Ok((text, usage)) => Attempt::Done(LlmResponse {
                    text,
                    usage,
                    latency_ms: started.elapsed().as_millis() as u64,
                }),
                Err(e) => Attempt::Fatal(e),
            },
            401 | 403 => Attempt::Fatal(LlmError::Credential { status }),
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Fatal(LlmError::Protocol {
                message: format!("HTTP {status}"),
                excerpt: excerpt(&text),
            }),
        }
    }
}

impl LlmClient for HttpClient {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        request.validate()?;
        let body = request.wire_body();
        let started = Instant::now();
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body, started) {
                Attempt::Done(r) => return Ok(r),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(message) if attempts > self.config.retries => {
                    return Err(LlmError::Transport { attempts, message });
                }
                Attempt::Retry(message) => {
                    log::warn!("LLM request attempt {attempts} failed ({message}); retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
}

/// Replays fixed responses in order, cycling, and remembers every request.
#[derive(Debug)]
pub struct ScriptedClient {
    fixtures: Vec<String>,
    state: Mutex<(usize, Vec<LlmRequest>)>,
}

impl ScriptedClient {
    pub fn new<S: Into<String>>(fixtures: impl IntoIterator<Item = S>) -> Result<Self, LlmError> {
        let fixtures: Vec<String> = fixtures.into_iter().map(Into::into).collect();
        if fixtures.is_empty() {
            return Err(LlmError::Config("scripted client needs at least one fixture".into()));
        }
        Ok(ScriptedClient {
            fixtures,
            state: Mutex::new((0, Vec::new())),
        })
    }

    pub fn requests(&self) -> Vec<LlmRequest> {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).1.clone()
    }

    pub fn calls(&self) -> usize {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).1.len()
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let text = self.fixtures[state.0 % self.fixtures.len()].clone();
        state.0 += 1;
        state.1.push(request.clone());
        Ok(LlmResponse {
            text,
            usage: None,
            latency_ms: 0,
        })
    }
}
