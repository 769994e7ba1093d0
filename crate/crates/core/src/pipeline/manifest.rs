//! Per-stage manifests: config hash, input hashes, outputs, counters, and
//! timing. A stage re-runs only when its config hash or any input hash
//! changes; otherwise the stored manifest is returned as a cache hit.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
    pub counters: BTreeMap<String, serde_json::Value>,
    pub elapsed_ms: u128,
    pub cache_hit: bool,
    pub created_unix: i64,
}

pub fn hash_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex_string(&hasher.finalize()))
}

pub fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable config");
    hex_string(&Sha256::digest(&bytes))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(stage_dir: &Path) -> PathBuf {
    stage_dir.join("manifest.json")
}

pub fn load_manifest(stage_dir: &Path) -> Result<Option<Manifest>> {
    let path = manifest_path(stage_dir);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest = serde_json::from_str(&text).map_err(|e| Error::Json {
        context: format!("manifest {}", path.display()),
        source: e,
    })?;
    Ok(Some(manifest))
}

pub fn store_manifest(stage_dir: &Path, manifest: &Manifest) -> Result<()> {
    std::fs::create_dir_all(stage_dir).map_err(|e| Error::io(stage_dir, e))?;
    let path = manifest_path(stage_dir);
    let text = serde_json::to_string_pretty(manifest).expect("serializable manifest");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// True when a stored manifest matches the config hash and every input hash.
pub fn is_fresh(
    existing: &Manifest,
    config_hash: &str,
    input_hashes: &BTreeMap<String, String>,
) -> bool {
    existing.config_hash == config_hash
        && &existing.input_hashes == input_hashes
        && existing.outputs.iter().all(|p| p.exists())
}

pub fn now_unix() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_hash_is_content_based() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        std::fs::write(&a, "same").unwrap();
        std::fs::write(&b, "same").unwrap();
        assert_eq!(hash_file(&a).unwrap(), hash_file(&b).unwrap());
        std::fs::write(&b, "different").unwrap();
        assert_ne!(hash_file(&a).unwrap(), hash_file(&b).unwrap());
    }

    #[test]
    fn manifest_round_trip_and_freshness() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("artifact.json");
        std::fs::write(&out, "{}").unwrap();
        let manifest = Manifest {
            stage: "ingest".into(),
            config_hash: "abc".into(),
            input_hashes: [("events".to_string(), "h1".to_string())].into(),
            outputs: vec![out],
            counters: BTreeMap::new(),
            elapsed_ms: 5,
            cache_hit: false,
            created_unix: now_unix(),
        };
        store_manifest(dir.path(), &manifest).unwrap();
        let loaded = load_manifest(dir.path()).unwrap().unwrap();
        assert_eq!(loaded, manifest);
        assert!(is_fresh(&loaded, "abc", &manifest.input_hashes));
        assert!(!is_fresh(&loaded, "other", &manifest.input_hashes));
        let mut changed = manifest.input_hashes.clone();
        changed.insert("events".into(), "h2".into());
        assert!(!is_fresh(&loaded, "abc", &changed));
    }
}
