//! Output files stamped with the hash of the run configuration.
//!
//! JSON artifacts carry a top-level `config_sha256` field and CSV artifacts
//! start with a `# config_sha256=<hex>` line. An existing artifact with a
//! different or missing hash is only replaced with `--force`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

const CSV_PREFIX: &str = "# config_sha256=";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical JSON form of the resolved run parameters.
pub fn config_hash(spec: &Value) -> String {
    sha256_hex(spec.to_string().as_bytes())
}

/// Hash embedded in an existing artifact, if any.
fn embedded_hash(path: &Path) -> Option<String> {
    let text = fs::read_to_string(path).ok()?;
    if path.extension().is_some_and(|e| e == "csv") {
        return text.lines().next()?.strip_prefix(CSV_PREFIX).map(str::to_string);
    }
    if path.extension().is_some_and(|e| e == "jsonl") {
        let first: Value = serde_json::from_str(text.lines().next()?).ok()?;
        return first.get("config_sha256")?.as_str().map(str::to_string);
    }
    let v: Value = serde_json::from_str(&text).ok()?;
    v.get("config_sha256")?.as_str().map(str::to_string)
}

/// Fails when `dir/manifest.json` exists with a different hash.
pub fn check_manifest(dir: &Path, spec: &Value) -> Result<(), CliError> {
    let path = dir.join("manifest.json");
    if path.exists() && embedded_hash(&path).as_deref() != Some(config_hash(spec).as_str()) {
        return Err(conflict(&path));
    }
    Ok(())
}

fn conflict(path: &Path) -> CliError {
    CliError::Conflict(format!(
        "{} was written by a different configuration; pass --force to overwrite",
        path.display()
    ))
}

/// Files of one run, written together with `manifest.json`.
pub struct ArtifactSet {
    dir: PathBuf,
    hash: String,
    spec: Value,
    force: bool,
    files: Vec<(String, String)>,
}

impl ArtifactSet {
    pub fn new(dir: PathBuf, spec: Value, force: bool) -> Self {
        ArtifactSet {
            dir,
            hash: config_hash(&spec),
            spec,
            force,
            files: Vec::new(),
        }
    }

    pub fn json(&mut self, name: &str, key: &str, payload: &impl Serialize) -> Result<(), CliError> {
        let body = json!({ "config_sha256": self.hash, key: payload });
        let text = serde_json::to_string_pretty(&body).map_err(|e| CliError::Runtime(e.to_string()))?;
        self.files.push((name.to_string(), text + "\n"));
        Ok(())
    }

    pub fn csv(&mut self, name: &str, body: &str) {
        self.files.push((name.to_string(), format!("{CSV_PREFIX}{}\n{body}", self.hash)));
    }

    /// JSON lines whose first record is the hash header.
    pub fn json_lines(&mut self, name: &str, body: &str) {
        let header = json!({ "config_sha256": self.hash });
        self.files.push((name.to_string(), format!("{header}\n{body}")));
    }

    /// Checks every target first, so a refused run leaves the directory
    /// untouched.
    pub fn write(self, command: &str, seed: Option<u64>) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::Runtime(format!("{}: {e}", self.dir.display())))?;
        let mut names: Vec<&str> = self.files.iter().map(|f| f.0.as_str()).collect();
        names.push("manifest.json");
        if !self.force {
            for name in &names {
                let path = self.dir.join(name);
                if path.exists() && embedded_hash(&path).as_deref() != Some(self.hash.as_str()) {
                    return Err(conflict(&path));
                }
            }
        }
        let manifest = json!({
            "config_sha256": self.hash,
            "tool": "ergokit-cli",
            "tool_version": env!("CARGO_PKG_VERSION"),
            "ergokit_version": ergokit::VERSION,
            "command": command,
            "seed": seed,
            "config": self.spec,
            "artifacts": self.files.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(),
        });
        let mut written = Vec::new();
        let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        for (name, text) in self.files.iter().map(|(n, t)| (n.as_str(), t.as_str())).chain([("manifest.json", manifest_text.as_str())]) {
            let path = self.dir.join(name);
            fs::write(&path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_key_order_free() {
        let a = json!({"b": 1, "a": [1.5, "x"]});
        let b: Value = serde_json::from_str(r#"{"a": [1.5, "x"], "b": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn mismatched_hash_needs_force() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = ArtifactSet::new(dir.path().into(), json!({"seed": 1}), false);
        a.csv("t.csv", "x\n1\n");
        a.write("test", Some(1)).unwrap();
        // same configuration rewrites freely
        let mut same = ArtifactSet::new(dir.path().into(), json!({"seed": 1}), false);
        same.csv("t.csv", "x\n1\n");
        same.write("test", Some(1)).unwrap();
        let mut b = ArtifactSet::new(dir.path().into(), json!({"seed": 2}), false);
        b.csv("t.csv", "x\n2\n");
        assert!(matches!(b.write("test", Some(2)), Err(CliError::Conflict(_))));
        assert!(fs::read_to_string(dir.path().join("t.csv")).unwrap().ends_with("1\n"));
        let mut c = ArtifactSet::new(dir.path().into(), json!({"seed": 2}), true);
        c.csv("t.csv", "x\n2\n");
        c.write("test", Some(2)).unwrap();
        assert!(fs::read_to_string(dir.path().join("t.csv")).unwrap().ends_with("2\n"));
    }
}
