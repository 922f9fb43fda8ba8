//! Pipeline configuration: one TOML file, flag overrides, a global seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::EvalOptions;
use crate::folds::MixingPolicy;
use crate::gateway::BackendConfig;
use crate::instructions::MixConfig;
use crate::model::LanguageLimits;
use crate::taskgen::GenConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Toml {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn default_corpus() -> PathBuf {
    PathBuf::from("corpus.tsv")
}
fn default_output_root() -> PathBuf {
    PathBuf::from("procbench-out")
}
fn default_seed() -> u64 {
    17
}
fn default_loop_redo_bound() -> u32 {
    2
}
fn default_language_cap() -> usize {
    5_000
}
fn default_trace_sample_cap() -> usize {
    50
}
fn default_anomaly_attempts() -> u32 {
    20
}
fn default_parse_failure_threshold() -> f64 {
    0.2
}

fn default_backends() -> BTreeMap<String, BackendConfig> {
    [
        ("oracle".to_string(), BackendConfig::oracle()),
        ("random".to_string(), BackendConfig::random()),
    ]
    .into_iter()
    .collect()
}

/// Everything the pipeline needs; every field has a default, so a config
/// file only states what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Corpus file: one `model-id<TAB>process-tree` per line.
    pub corpus: PathBuf,
    /// Root directory for all stage artifacts.
    pub output_root: PathBuf,
    /// Global seed; recorded in every manifest.
    pub seed: u64,
    /// How often loop redo-parts may fire during playout.
    pub loop_redo_bound: u32,
    /// Trace cap per model; larger languages skip the model.
    pub language_cap: usize,
    /// Valid-trace sample cap per model for the trace-based tasks.
    pub trace_sample_cap: usize,
    /// Perturbation attempts per anomaly.
    pub anomaly_attempts: u32,
    /// Evaluation fails a run when a task's parse-failure rate exceeds this.
    pub parse_failure_threshold: f64,
    /// Variant proportions per task.
    pub proportions: MixConfig,
    /// Training-mix contribution caps.
    pub mixing: MixingPolicy,
    /// Named inference backends.
    pub backends: BTreeMap<String, BackendConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: default_corpus(),
            output_root: default_output_root(),
            seed: default_seed(),
            loop_redo_bound: default_loop_redo_bound(),
            language_cap: default_language_cap(),
            trace_sample_cap: default_trace_sample_cap(),
            anomaly_attempts: default_anomaly_attempts(),
            parse_failure_threshold: default_parse_failure_threshold(),
            proportions: MixConfig::default(),
            mixing: MixingPolicy::default(),
            backends: default_backends(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: PipelineConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Toml {
                path: path.display().to_string(),
                source,
            })?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.proportions
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.mixing
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.parse_failure_threshold) {
            return Err(ConfigError::Invalid(
                "parse_failure_threshold must lie in [0, 1]".into(),
            ));
        }
        if self.language_cap == 0 {
            return Err(ConfigError::Invalid("language_cap must be positive".into()));
        }
        if self.trace_sample_cap == 0 {
            return Err(ConfigError::Invalid(
                "trace_sample_cap must be positive".into(),
            ));
        }
        for (id, backend) in &self.backends {
            backend
                .validate(id)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn limits(&self) -> LanguageLimits {
        LanguageLimits {
            loop_redo_bound: self.loop_redo_bound,
            max_traces: self.language_cap,
        }
    }

    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            limits: self.limits(),
            trace_sample_cap: self.trace_sample_cap,
            anomaly_attempts: self.anomaly_attempts,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            limits: self.limits(),
            parse_failure_threshold: self.parse_failure_threshold,
        }
    }

    /// Backend by name; `oracle` and `random` exist even without config.
    pub fn backend(&self, id: &str) -> Option<BackendConfig> {
        if let Some(config) = self.backends.get(id) {
            return Some(config.clone());
        }
        match id {
            "oracle" => Some(BackendConfig::oracle()),
            "random" => Some(BackendConfig::random()),
            _ => None,
        }
    }

    /// Digest of the semantic parameters (everything except file paths and
    /// backend endpoints), for manifest comparison across output locations.
    pub fn params_digest(&self) -> String {
        let semantic = serde_json::json!({
            "seed": self.seed,
            "loop_redo_bound": self.loop_redo_bound,
            "language_cap": self.language_cap,
            "trace_sample_cap": self.trace_sample_cap,
            "anomaly_attempts": self.anomaly_attempts,
            "parse_failure_threshold": self.parse_failure_threshold,
            "proportions": self.proportions,
            "mixing": self.mixing,
        });
        hex::encode(Sha256::digest(semantic.to_string().as_bytes()))
    }
}
