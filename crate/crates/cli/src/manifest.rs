//! Run manifests: everything needed to re-run a command and check that
//! it produced the same bytes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::Invocation;
use crate::error::{CliError, CliResult};

pub const MANIFEST_SCHEMA: &str = "hlmt.manifest/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub command: String,
    /// Command line as typed, for reference. Replay uses `config`.
    pub argv: Vec<String>,
    pub config: Invocation,
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub output_sha256: String,
    pub timestamp: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> CliResult<InputDigest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(InputDigest { path: path.to_path_buf(), sha256: sha256_hex(&bytes) })
}

impl RunManifest {
    pub fn new(argv: Vec<String>, config: Invocation, extra_inputs: &[PathBuf], output: &str) -> CliResult<Self> {
        let mut inputs = Vec::new();
        for path in config.inputs().iter().chain(extra_inputs) {
            inputs.push(file_digest(path)?);
        }
        Ok(Self {
            schema_version: MANIFEST_SCHEMA.into(),
            command: config.name().into(),
            argv,
            seed: config.seed(),
            config,
            version: hlmt_core::VERSION.into(),
            inputs,
            output_sha256: sha256_hex(output.as_bytes()),
            timestamp: chrono::Utc::now().to_rfc3339(),
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config { field: "manifest".into(), message: e.to_string() })?;
        if m.schema_version != MANIFEST_SCHEMA {
            return Err(CliError::Config {
                field: "schema_version".into(),
                message: format!("unsupported manifest schema `{}`", m.schema_version),
            });
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    /// Re-runs the recorded invocation. Inputs read by the command must be
    /// unchanged, and the output must hash to the recorded digest.
    pub fn replay(&self) -> CliResult<String> {
        for path in self.config.inputs() {
            let recorded = self
                .inputs
                .iter()
                .find(|d| d.path == path)
                .ok_or_else(|| CliError::Replay(format!("no digest recorded for {}", path.display())))?;
            let now = file_digest(&path)?;
            if now.sha256 != recorded.sha256 {
                return Err(CliError::Data(format!("{} changed since the manifest was written", path.display())));
            }
        }
        let output = self.config.execute()?;
        let digest = sha256_hex(output.as_bytes());
        if digest != self.output_sha256 {
            return Err(CliError::Replay(format!(
                "output digest {digest} differs from recorded {} (recorded with version {}, running {})",
                self.output_sha256,
                self.version,
                hlmt_core::VERSION
            )));
        }
        Ok(output)
    }
}
