//! Batch execution of instruction instances against model backends, with a
//! crash-safe prompt cache and bounded request concurrency.

mod backends;
mod cache;

pub use backends::{BackendError, ChatBackend, HttpChatBackend, OracleBackend, RandomBackend};
pub use cache::{cache_path, CacheEntry};

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use crate::instructions::InstructionInstance;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("authentication: {0}")]
    Auth(String),
    #[error("cache io: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker panicked: {0}")]
    Worker(String),
}

/// Which responder to run against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    Oracle,
    Random,
}

fn default_temperature() -> f64 {
    0.0
}
fn default_max_tokens() -> u32 {
    512
}
fn default_discovery_max_tokens() -> u32 {
    2_048
}
fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_in_flight() -> usize {
    4
}

/// One backend's configuration. HTTP backends need an endpoint and model;
/// the built-in oracle and random responders need nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    /// Discovery outputs (graphs, trees) can be long; they get their own cap.
    #[serde(default = "default_discovery_max_tokens")]
    pub discovery_max_output_tokens: u32,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Seed for the random responder; the pipeline seed applies when unset.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl BackendConfig {
    pub fn oracle() -> Self {
        BackendConfig {
            kind: BackendKind::Oracle,
            endpoint: None,
            model: None,
            temperature: default_temperature(),
            max_output_tokens: default_max_tokens(),
            discovery_max_output_tokens: default_discovery_max_tokens(),
            auth_env: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            max_in_flight: default_in_flight(),
            seed: None,
        }
    }

    pub fn random() -> Self {
        BackendConfig {
            kind: BackendKind::Random,
            ..BackendConfig::oracle()
        }
    }

    pub fn validate(&self, id: &str) -> Result<(), GatewayError> {
        if self.kind == BackendKind::HttpChat && (self.endpoint.is_none() || self.model.is_none())
        {
            return Err(GatewayError::Config(format!(
                "backend {id}: http_chat requires endpoint and model"
            )));
        }
        if self.max_in_flight == 0 {
            return Err(GatewayError::Config(format!(
                "backend {id}: max_in_flight must be positive"
            )));
        }
        Ok(())
    }
}

/// One response, in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub instance_id: String,
    pub prompt_digest: String,
    pub raw_output: String,
    pub latency_ms: u64,
    pub backend: String,
    pub cached: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A prepared request: prompt text plus everything a backend may need.
#[derive(Debug, Clone)]
pub struct PromptJob {
    pub instance_id: String,
    pub prompt: String,
    /// The instance's gold output, echoed by the oracle backend.
    pub expected: String,
    pub max_output_tokens: u32,
    /// Digest of (backend id, prompt, decoding parameters).
    pub digest: String,
}

/// The full prompt: formulation, blank line, context.
pub fn render_prompt(instance: &InstructionInstance) -> String {
    format!(
        "{}\n\n{}",
        instance.instruction.formulation, instance.instruction.context
    )
}

/// Cache key: a response is reusable only for the same backend, the same
/// prompt bytes, and the same decoding parameters.
pub fn prompt_digest(backend: &str, prompt: &str, temperature: f64, max_tokens: u32) -> String {
    let mut hasher = Sha256::new();
    for part in [
        backend.as_bytes(),
        prompt.as_bytes(),
        &temperature.to_le_bytes()[..],
        &max_tokens.to_le_bytes()[..],
    ] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hex::encode(hasher.finalize())
}

/// Builds the configured backend.
pub fn make_backend(
    id: &str,
    config: &BackendConfig,
    fallback_seed: u64,
) -> Result<Arc<dyn ChatBackend>, GatewayError> {
    config.validate(id)?;
    Ok(match config.kind {
        BackendKind::Oracle => Arc::new(OracleBackend::new(id)),
        BackendKind::Random => Arc::new(RandomBackend::new(id, config.seed.unwrap_or(fallback_seed))),
        BackendKind::HttpChat => Arc::new(HttpChatBackend::new(id, config)?),
    })
}

/// Runs every instance against the backend. Cached responses are not
/// re-sent; fresh ones are cached as they complete, so an interrupted run
/// loses at most the in-flight requests. Failures that survive the retry
/// budget yield a record with empty output and an error note. Output order
/// matches input order.
pub async fn run_batch(
    instances: &[InstructionInstance],
    backend_id: &str,
    config: &BackendConfig,
    cache_dir: &Path,
    fallback_seed: u64,
) -> Result<Vec<ResponseRecord>, GatewayError> {
    let backend = make_backend(backend_id, config, fallback_seed)?;
    run_batch_with_backend(backend, instances, config, cache_dir).await
}

/// [`run_batch`] with a caller-supplied backend implementation.
pub async fn run_batch_with_backend(
    backend: Arc<dyn ChatBackend>,
    instances: &[InstructionInstance],
    config: &BackendConfig,
    cache_dir: &Path,
) -> Result<Vec<ResponseRecord>, GatewayError> {
    config.validate(backend.id())?;
    let cache_dir: PathBuf = cache_dir.to_path_buf();
    let semaphore = Arc::new(Semaphore::new(config.max_in_flight));
    let mut results: Vec<Option<ResponseRecord>> = vec![None; instances.len()];
    let mut join_set: JoinSet<Result<(usize, ResponseRecord), GatewayError>> = JoinSet::new();

    for (index, instance) in instances.iter().enumerate() {
        let prompt = render_prompt(instance);
        let max_output_tokens = if instance.task.is_discovery() {
            config.discovery_max_output_tokens
        } else {
            config.max_output_tokens
        };
        let digest = prompt_digest(backend.id(), &prompt, config.temperature, max_output_tokens);

        if backend.uses_cache() {
            if let Some(entry) = cache::load(&cache_dir, backend.id(), &digest) {
                results[index] = Some(ResponseRecord {
                    instance_id: instance.instance_id.clone(),
                    prompt_digest: digest,
                    raw_output: entry.raw_output,
                    latency_ms: 0,
                    backend: backend.id().to_string(),
                    cached: true,
                    error: None,
                });
                continue;
            }
        }

        let job = PromptJob {
            instance_id: instance.instance_id.clone(),
            prompt,
            expected: instance.output.clone(),
            max_output_tokens,
            digest,
        };
        let backend = Arc::clone(&backend);
        let semaphore = Arc::clone(&semaphore);
        let cache_dir = cache_dir.clone();
        let max_retries = config.max_retries;
        let temperature = config.temperature;
        join_set.spawn(async move {
            let _permit = semaphore
                .acquire()
                .await
                .map_err(|e| GatewayError::Worker(e.to_string()))?;
            let record =
                execute_job(backend.as_ref(), &job, &cache_dir, max_retries, temperature).await?;
            Ok((index, record))
        });
    }

    while let Some(joined) = join_set.join_next().await {
        let (index, record) = joined.map_err(|e| GatewayError::Worker(e.to_string()))??;
        results[index] = Some(record);
    }

    Ok(results
        .into_iter()
        .map(|r| r.expect("every index filled"))
        .collect())
}

/// Blocking wrapper for synchronous callers.
pub fn run_batch_blocking(
    instances: &[InstructionInstance],
    backend_id: &str,
    config: &BackendConfig,
    cache_dir: &Path,
    fallback_seed: u64,
) -> Result<Vec<ResponseRecord>, GatewayError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| GatewayError::Worker(e.to_string()))?
        .block_on(run_batch(
            instances,
            backend_id,
            config,
            cache_dir,
            fallback_seed,
        ))
}

async fn execute_job(
    backend: &dyn ChatBackend,
    job: &PromptJob,
    cache_dir: &Path,
    max_retries: u32,
    temperature: f64,
) -> Result<ResponseRecord, GatewayError> {
    let started = Instant::now();
    let mut last_error = String::new();
    for attempt in 0..=max_retries {
        match backend.complete(job).await {
            Ok(raw_output) => {
                if backend.uses_cache() {
                    cache::store(
                        cache_dir,
                        &CacheEntry {
                            digest: job.digest.clone(),
                            backend: backend.id().to_string(),
                            prompt: job.prompt.clone(),
                            temperature,
                            max_output_tokens: job.max_output_tokens,
                            raw_output: raw_output.clone(),
                        },
                    )?;
                }
                return Ok(ResponseRecord {
                    instance_id: job.instance_id.clone(),
                    prompt_digest: job.digest.clone(),
                    raw_output,
                    latency_ms: started.elapsed().as_millis() as u64,
                    backend: backend.id().to_string(),
                    cached: false,
                    error: None,
                });
            }
            Err(BackendError::Auth(message)) => return Err(GatewayError::Auth(message)),
            Err(BackendError::Malformed(message)) => {
                last_error = message;
                break;
            }
            Err(BackendError::Transport(message)) => {
                last_error = message;
                if attempt < max_retries {
                    let backoff = Duration::from_millis(100u64.saturating_mul(1 << attempt.min(6)))
                        .min(Duration::from_secs(5));
                    tokio::time::sleep(backoff).await;
                }
            }
        }
    }
    Ok(ResponseRecord {
        instance_id: job.instance_id.clone(),
        prompt_digest: job.digest.clone(),
        raw_output: String::new(),
        latency_ms: started.elapsed().as_millis() as u64,
        backend: backend.id().to_string(),
        cached: false,
        error: Some(last_error),
    })
}
