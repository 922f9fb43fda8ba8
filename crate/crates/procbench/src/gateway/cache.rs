//! Prompt-keyed response cache: one JSON file per prompt digest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// A cached backend response, keyed by (backend id, prompt, decoding
/// parameters). The prompt and parameters are stored for auditability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub digest: String,
    pub backend: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub raw_output: String,
}

/// `<cache_dir>/<backend>/<first-2-hex>/<digest>.json`
pub fn cache_path(cache_dir: &Path, backend: &str, digest: &str) -> PathBuf {
    let backend_dir: String = backend
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    cache_dir
        .join(backend_dir)
        .join(&digest[..2])
        .join(format!("{digest}.json"))
}

pub fn load(cache_dir: &Path, backend: &str, digest: &str) -> Option<CacheEntry> {
    let path = cache_path(cache_dir, backend, digest);
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

/// Writes through a temp file and renames, so a crash never leaves a
/// half-written entry and completed responses always persist.
pub fn store(cache_dir: &Path, entry: &CacheEntry) -> std::io::Result<()> {
    let path = cache_path(cache_dir, &entry.backend, &entry.digest);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(entry).expect("serializable entry"))?;
    fs::rename(&tmp, &path)
}
