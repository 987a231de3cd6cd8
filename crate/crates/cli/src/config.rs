//! Effective configuration: command-line flags over a TOML file over
//! built-in defaults.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sobench::corpus::{ModalityVariant, PackConfig};
use sobench::tasks::SamplingConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub workers: usize,
    pub seed: Option<u64>,
    pub corpus: CorpusSection,
    pub generation: GenerationSection,
    pub eval: EvalSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            seed: None,
            corpus: CorpusSection::default(),
            generation: GenerationSection::default(),
            eval: EvalSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub variants: Vec<ModalityVariant>,
    /// Exact tags, or prefixes ending in `*`.
    pub tags: Vec<String>,
    pub separator: String,
    pub inline_code_as_code: bool,
    pub pack: bool,
    pub window_size: usize,
    pub record_separator: String,
    pub min_window_fill: Option<usize>,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let pack = PackConfig::default();
        CorpusSection {
            variants: ModalityVariant::ALL.to_vec(),
            tags: vec!["python".into(), "python*".into()],
            separator: "\n".into(),
            inline_code_as_code: false,
            pack: false,
            window_size: pack.window_size,
            record_separator: pack.record_separator,
            min_window_fill: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSection {
    pub gateway: String,
    pub temperatures: Vec<f64>,
    pub top_p: f64,
    pub samples: u32,
    pub max_new_tokens: u32,
    /// Extra stop sequences on top of the suite defaults.
    pub stop_sequences: Vec<String>,
    /// Completions requested per call.
    pub batch_size: u32,
    pub retries: u32,
    pub request_timeout_s: f64,
}

impl Default for GenerationSection {
    fn default() -> Self {
        let sampling = SamplingConfig::default();
        GenerationSection {
            gateway: "http://127.0.0.1:8000".into(),
            temperatures: sampling.temperatures,
            top_p: sampling.top_p,
            samples: sampling.num_samples,
            max_new_tokens: sampling.max_new_tokens,
            stop_sequences: sampling.stop_sequences,
            batch_size: 10,
            retries: 3,
            request_timeout_s: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub python: Option<String>,
    pub timeout_s: f64,
    pub memory_mb: u64,
    /// Empty means the suite's standard k set.
    pub ks: Vec<u32>,
    pub allow_partial: bool,
    pub label: String,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            python: None,
            timeout_s: 10.0,
            memory_mb: 512,
            ks: Vec::new(),
            allow_partial: false,
            label: "model".into(),
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Overwrites `target` when a flag was given.
pub fn apply<T>(target: &mut T, flag: Option<T>) {
    if let Some(value) = flag {
        *target = value;
    }
}
