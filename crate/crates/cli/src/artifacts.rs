//! Artifact writers. The manifest is written first and hashed; every
//! other file carries that hash, so a plot and the run that produced it
//! can always be matched up. Nothing here writes timestamps: identical
//! configs must produce identical bytes.

use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct ArtifactSet {
    dir: PathBuf,
    manifest_hash: String,
}

impl ArtifactSet {
    /// Creates the output directory, writes manifest.json, and locks in
    /// its hash for the files that follow.
    pub fn create(dir: &Path, manifest: &Value) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::numerical(format!("creating {}: {e}", dir.display())))?;
        let bytes = render_json(manifest);
        let manifest_hash = sha256_hex(&bytes);
        let path = dir.join("manifest.json");
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::numerical(format!("writing {}: {e}", path.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest_hash,
        })
    }


    /// CSV with the hash comment first, then the header, then the rows.
    pub fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
        let mut text = format!("# manifest_sha256 = {}\n{header}\n", self.manifest_hash);
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    /// JSON artifact with the manifest hash injected at the top level.
    pub fn write_json(&self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut value = value.clone();
        match value.as_object_mut() {
            Some(map) => {
                map.insert(
                    "manifest_sha256".into(),
                    Value::String(self.manifest_hash.clone()),
                );
            }
            None => {
                return Err(CliError::numerical(format!(
                    "artifact {name} must be a JSON object"
                )))
            }
        }
        self.write_bytes(name, &render_json(&value))
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::numerical(format!("writing {}: {e}", path.display())))
    }
}

fn render_json(value: &Value) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    text.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_reference_vector() {
        // sha256 of the empty string
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.0, 1.0, -2.5e-7, std::f64::consts::PI, 1.6113574638497827] {
            assert_eq!(fmt_f(v).parse::<f64>().unwrap(), v);
        }
    }
}
