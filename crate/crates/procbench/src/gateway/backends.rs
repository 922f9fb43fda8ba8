//! Chat backends: a generic chat-completion HTTP client plus offline oracle
//! and random reference responders.

use async_trait::async_trait;
use rand::Rng;
use serde::Deserialize;

use crate::rng;

use super::{BackendConfig, GatewayError, PromptJob};

#[derive(Debug, Clone, thiserror::Error)]
pub enum BackendError {
    /// Authentication problem; aborts the whole batch.
    #[error("authentication failed: {0}")]
    Auth(String),
    /// Transient transport or server trouble; retried with backoff.
    #[error("transport error: {0}")]
    Transport(String),
    /// The backend answered with something the client cannot interpret;
    /// not retried.
    #[error("malformed backend response: {0}")]
    Malformed(String),
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    fn id(&self) -> &str;

    /// Whether responses may be served from and written to the prompt cache.
    fn uses_cache(&self) -> bool {
        true
    }

    async fn complete(&self, job: &PromptJob) -> Result<String, BackendError>;
}

/// Echoes each instance's gold output: a known-perfect end-to-end path for
/// exercising the pipeline without model access.
///
/// The oracle bypasses the prompt cache: distinct instances may share one
/// prompt while expecting different golds (a prefix with several valid next
/// activities), so prompt-keyed reuse would cross-wire them.
pub struct OracleBackend {
    id: String,
}

impl OracleBackend {
    pub fn new(id: impl Into<String>) -> Self {
        OracleBackend { id: id.into() }
    }
}

#[async_trait]
impl ChatBackend for OracleBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn uses_cache(&self) -> bool {
        false
    }

    async fn complete(&self, job: &PromptJob) -> Result<String, BackendError> {
        Ok(job.expected.clone())
    }
}

/// Answers True or False by a seeded coin on the prompt digest: a binary
/// reference responder for calibration runs.
pub struct RandomBackend {
    id: String,
    seed: u64,
}

impl RandomBackend {
    pub fn new(id: impl Into<String>, seed: u64) -> Self {
        RandomBackend { id: id.into(), seed }
    }
}

#[async_trait]
impl ChatBackend for RandomBackend {
    fn id(&self) -> &str {
        &self.id
    }

    async fn complete(&self, job: &PromptJob) -> Result<String, BackendError> {
        let mut stream = rng::stream(self.seed, &["random-backend", &job.digest]);
        Ok(if stream.gen_bool(0.5) { "True" } else { "False" }.to_string())
    }
}

#[derive(serde::Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(serde::Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

/// Client for the de-facto chat-completion JSON schema: a messages array in,
/// `choices[0].message.content` out. Bearer auth comes from the environment
/// variable named in the config.
pub struct HttpChatBackend {
    id: String,
    client: reqwest::Client,
    endpoint: String,
    model: String,
    temperature: f64,
    token: Option<String>,
}

impl HttpChatBackend {
    pub fn new(id: impl Into<String>, config: &BackendConfig) -> Result<Self, GatewayError> {
        let id = id.into();
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| GatewayError::Config(format!("backend {id}: endpoint required")))?;
        let model = config
            .model
            .clone()
            .ok_or_else(|| GatewayError::Config(format!("backend {id}: model required")))?;
        let token = match &config.auth_env {
            None => None,
            Some(var) => Some(std::env::var(var).map_err(|_| {
                GatewayError::Config(format!(
                    "backend {id}: auth environment variable {var} is not set"
                ))
            })?),
        };
        let client = reqwest::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(format!("backend {id}: {e}")))?;
        Ok(HttpChatBackend {
            id,
            client,
            endpoint,
            model,
            temperature: config.temperature,
            token,
        })
    }
}

#[async_trait]
impl ChatBackend for HttpChatBackend {
    fn id(&self) -> &str {
        &self.id
    }

    async fn complete(&self, job: &PromptJob) -> Result<String, BackendError> {
        let body = ChatRequest {
            model: &self.model,
            messages: [ChatMessage {
                role: "user",
                content: &job.prompt,
            }],
            temperature: self.temperature,
            max_tokens: job.max_output_tokens,
        };
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .await
            .map_err(|e| BackendError::Transport(e.to_string()))?;

        let status = response.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN
        {
            return Err(BackendError::Auth(format!("endpoint returned {status}")));
        }
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(BackendError::Transport(format!("endpoint returned {status}")));
        }
        if !status.is_success() {
            return Err(BackendError::Malformed(format!("endpoint returned {status}")));
        }
        let parsed: ChatResponse = response
            .json()
            .await
            .map_err(|e| BackendError::Malformed(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendError::Malformed("response has no choices".into()))
    }
}
