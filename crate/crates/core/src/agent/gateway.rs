use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::{render_prompt, PromptError, PromptTemplate};
use super::reply::{parse_reply, ReplyError};
use super::{Decision, Observation};

/// Sampling temperature used for the main runs.
pub const DEFAULT_TEMPERATURE: f64 = 0.7;
/// Lower temperature used for robustness reruns.
pub const ROBUSTNESS_TEMPERATURE: f64 = 0.35;

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}
fn default_api_key_env() -> String {
    "FEESIM_API_KEY".into()
}
fn default_timeout_secs() -> f64 {
    60.0
}
fn default_max_attempts() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_max_in_flight() -> usize {
    8
}

/// Connection and decoding settings for a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    /// Full URL of an OpenAI-compatible `chat/completions` endpoint.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    /// Environment variable holding the API key; no key header if unset.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    /// Total attempts per decision, first try included.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    /// Base delay of the exponential backoff between attempts.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// Treat a clamped `expected_total` as a failed attempt instead of a warning.
    #[serde(default)]
    pub retry_on_out_of_range: bool,
}

impl GatewayConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        GatewayConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: None,
            api_key_env: default_api_key_env(),
            timeout_secs: default_timeout_secs(),
            max_attempts: default_max_attempts(),
            backoff_ms: default_backoff_ms(),
            max_in_flight: default_max_in_flight(),
            retry_on_out_of_range: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(format!("timeout_secs {} must be positive", self.timeout_secs));
        }
        if self.endpoint.trim().is_empty() {
            return Err("endpoint is empty".into());
        }
        if self.model.trim().is_empty() {
            return Err("model is empty".into());
        }
        Ok(())
    }
}

/// A provider-agnostic chat-completion call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub system: String,
    pub user: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Failed(String),
}

/// Sends one chat request and returns the assistant's text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

/// Final error of a gateway decision once retries are exhausted.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("invalid reply after {attempts} attempt(s): {error}")]
    InvalidReply { attempts: u32, error: ReplyError },
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// Chat-model agent: renders a prompt, calls the transport, parses the reply,
/// retrying with exponential backoff.
pub struct GatewayAgent {
    config: GatewayConfig,
    template: PromptTemplate,
    transport: Arc<dyn ChatTransport>,
}

enum Failure {
    Transport(TransportError),
    Reply(ReplyError),
}

impl GatewayAgent {
    pub fn new(
        config: GatewayConfig,
        template: PromptTemplate,
        transport: Arc<dyn ChatTransport>,
    ) -> Result<Self, GatewayError> {
        template.validate()?;
        Ok(GatewayAgent {
            config,
            template,
            transport,
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn decide(&self, obs: &Observation) -> Result<Decision, GatewayError> {
        let prompt = render_prompt(obs, &self.template)?;
        let request = ChatRequest {
            model: self.config.model.clone(),
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
            system: prompt.system,
            user: prompt.user,
        };
        let attempts = self.config.max_attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 && self.config.backoff_ms > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            let failure = match self.transport.complete(&request) {
                Err(e) => Failure::Transport(e),
                Ok(text) => match parse_reply(&text, obs.population) {
                    Err(e) => Failure::Reply(e),
                    Ok(parsed) => match parsed.out_of_range(obs.population) {
                        Some(e) if self.config.retry_on_out_of_range => Failure::Reply(e),
                        _ => return Ok(parsed.decision),
                    },
                },
            };
            last = Some(failure);
        }
        Err(match last.expect("at least one attempt") {
            Failure::Transport(TransportError::Timeout) => GatewayError::Timeout { attempts },
            Failure::Transport(TransportError::Failed(message)) => {
                GatewayError::Transport { attempts, message }
            }
            Failure::Reply(error) => GatewayError::InvalidReply { attempts, error },
        })
    }
}

/// Blocking HTTP transport for OpenAI-compatible chat-completion endpoints.
#[cfg(feature = "http")]
pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl HttpTransport {
    pub fn new(config: &GatewayConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .build()
            .into();
        HttpTransport {
            endpoint: config.endpoint.clone(),
            api_key: std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty()),
            agent,
        }
    }

    pub fn request_body(request: &ChatRequest) -> serde_json::Value {
        let mut body = serde_json::json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        if let Some(max_tokens) = request.max_tokens {
            body["max_tokens"] = max_tokens.into();
        }
        body
    }
}

#[cfg(feature = "http")]
impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(Self::request_body(request))
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => TransportError::Timeout,
                other => TransportError::Failed(other.to_string()),
            })?;
        let body: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::Failed(format!("unreadable response body: {e}")))?;
        body.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_owned)
            .ok_or_else(|| TransportError::Failed("response has no choices[0].message.content".into()))
    }
}
