use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const OUT_ENV: &str = "TNEP_FACTS_OUT";

/// Everything that determines a command's outputs. Hashing it gives the tag
/// stamped on every file the command writes.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: &'static str,
    /// Input paths, fixture name and any command-specific parameters.
    pub inputs: Value,
    pub formulation: Option<Value>,
    pub flags: Option<Value>,
    pub seed: Option<u64>,
    pub engine: Option<Value>,
    pub out_dir: PathBuf,
}

impl RunManifest {
    pub fn new(command: &'static str, out: &Path) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: Value::Null,
            formulation: None,
            flags: None,
            seed: None,
            engine: None,
            out_dir: resolve_out(out),
        }
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serialises");
        format!("{:x}", Sha256::digest(bytes))
    }
}

/// `--out`, unless the environment overrides it.
pub fn resolve_out(flag: &Path) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag.to_path_buf(),
    }
}

/// Output directory plus the manifest hash every file is tagged with.
pub struct Outputs {
    pub dir: PathBuf,
    pub hash: String,
}

impl Outputs {
    /// Creates the directory and writes `manifest.json`.
    pub fn open(manifest: &RunManifest) -> Result<Self> {
        let dir = manifest.out_dir.clone();
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let out = Outputs {
            dir,
            hash: manifest.hash(),
        };
        let mut doc = serde_json::to_value(manifest)?;
        doc["manifest_hash"] = Value::String(out.hash.clone());
        out.write_raw("manifest.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write_raw(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    /// JSON object with a `manifest_hash` field added at the top level.
    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut doc = serde_json::to_value(value)?;
        match &mut doc {
            Value::Object(map) => {
                map.insert("manifest_hash".into(), Value::String(self.hash.clone()));
            }
            other => {
                doc = serde_json::json!({ "manifest_hash": self.hash, "data": other.take() });
            }
        }
        self.write_raw(name, &(serde_json::to_string_pretty(&doc)? + "\n"))
    }

    /// Text file whose first line is `<comment> manifest <hash>`.
    pub fn tagged(&self, name: &str, comment: &str, body: &str) -> Result<PathBuf> {
        self.write_raw(name, &format!("{comment} manifest {}\n{body}", self.hash))
    }

    /// Files whose format leaves no room for a tag (CSV); `manifest.json`
    /// in the same directory carries the hash.
    pub fn plain(&self, name: &str, body: &str) -> Result<PathBuf> {
        self.write_raw(name, body)
    }
}
