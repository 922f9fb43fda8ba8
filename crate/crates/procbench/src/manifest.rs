//! Stage manifests: inputs, outputs, digests, counts.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buffer = [0u8; 64 * 1024];
    loop {
        let read = file.read(&mut buffer)?;
        if read == 0 {
            break;
        }
        hasher.update(&buffer[..read]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// What a pipeline stage ran on and produced. File names are stored relative
/// to the stage, never as absolute paths, so identical runs in different
/// output roots produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub tool_version: String,
    pub seed: u64,
    pub params_digest: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl StageManifest {
    pub fn new(stage: &str, seed: u64, params_digest: String) -> Self {
        StageManifest {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            params_digest,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            counts: BTreeMap::new(),
            notes: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self).expect("serializable"))?;
        std::fs::rename(&tmp, path)
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

/// Compares the digests a producing stage recorded against the files as they
/// are now; any difference means a downstream stage is reading stale or
/// hand-edited inputs and deserves a warning.
pub fn stale_input_warnings(
    producer_manifest: &Path,
    input_dir: &Path,
) -> Vec<String> {
    let Ok(manifest) = StageManifest::read(producer_manifest) else {
        return vec![format!(
            "no manifest at {}; provenance of inputs unknown",
            producer_manifest.display()
        )];
    };
    let mut warnings = Vec::new();
    for (name, recorded) in &manifest.outputs {
        let path = input_dir.join(name);
        match sha256_file(&path) {
            Ok(actual) if &actual == recorded => {}
            Ok(_) => warnings.push(format!(
                "{} changed since stage '{}' produced it",
                path.display(),
                manifest.stage
            )),
            Err(_) => warnings.push(format!(
                "{} recorded by stage '{}' is missing",
                path.display(),
                manifest.stage
            )),
        }
    }
    warnings
}
