use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;

/// Written beside every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub tool_version: String,
    pub config: Config,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpreter_version: Option<String>,
    /// SHA-256 of each input file, keyed by the path as given.
    pub input_checksums: BTreeMap<String, String>,
    /// Command-specific counts and labels.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(command: &str, config: &Config) -> Self {
        let started_at = now();
        let snapshot = serde_json::to_vec(config).expect("config serializes");
        let digest = hex::encode(Sha256::digest(&snapshot));
        let stamp = started_at.replace([':', '-', '.'], "");
        RunManifest {
            run_id: format!("{command}-{stamp}-{}", &digest[..8]),
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config.clone(),
            interpreter_version: None,
            input_checksums: BTreeMap::new(),
            details: BTreeMap::new(),
            started_at: started_at.clone(),
            finished_at: started_at,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> anyhow::Result<()> {
        let sum = sha256_file(path)?;
        self.input_checksums.insert(path.display().to_string(), sum);
        Ok(())
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(key.to_owned(), serde_json::to_value(value).expect("serializable detail"));
    }

    pub fn finish(mut self, path: &Path) -> anyhow::Result<()> {
        self.finished_at = now();
        crate::io::write_json(path, &self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        fs::write(&path, b"abc").unwrap();
        assert_eq!(sha256_file(&path).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_round_trips() {
        let mut m = RunManifest::start("eval", &Config::default());
        m.interpreter_version = Some("3.10.12".into());
        assert!(m.run_id.starts_with("eval-"));
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<RunManifest>(&text).unwrap(), m);
    }
}
