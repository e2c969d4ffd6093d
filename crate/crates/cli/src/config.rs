//! Experiment configuration loaded from TOML.
//!
//! ```toml
//! [task]
//! alphabet_size = 8
//! length = 16
//! order = 2
//! anchors = ["ABCDABCDABCDABCD", "EFGHEFGHEFGHEFGH", "ACEGACEGACEGACEG"]
//! metric = "levenshtein"   # or "kmer_tanimoto" with k and bits
//!
//! [train]
//! mode = "sgrpo"
//! steps = 300
//!
//! [train.hyper]
//! lambda = 0.5
//!
//! [sweep]
//! temperatures = [0.2, 0.4, 0.6]
//! samples_per_point = 128
//! seeds = [0, 1, 2]
//!
//! [output]
//! directory = "runs/sgrpo"
//! checkpoint_every = 50
//! ```
//!
//! Every section and key is optional; missing values take the defaults below.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgrpo_core::rollout::{letters_to_tokens, tokens_to_letters};
use sgrpo_core::{AnchorUtility, DissimilarityMetric, ToyTask, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: [{section}] {message}")]
    Invalid {
        path: PathBuf,
        section: &'static str,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Levenshtein,
    KmerTanimoto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSection {
    pub alphabet_size: usize,
    pub length: usize,
    pub order: usize,
    /// Anchor sequences written as letters, `A` for token 0.
    pub anchors: Vec<String>,
    pub metric: MetricKind,
    /// k-mer length for `kmer_tanimoto`.
    pub k: usize,
    /// Fingerprint width in bits for `kmer_tanimoto`.
    pub bits: usize,
}

impl Default for TaskSection {
    fn default() -> Self {
        let task = ToyTask::default_task();
        Self {
            alphabet_size: task.alphabet_size,
            length: task.length,
            order: task.order,
            anchors: task.utility.anchors().iter().map(|a| tokens_to_letters(a)).collect(),
            metric: MetricKind::Levenshtein,
            k: 3,
            bits: 256,
        }
    }
}

impl TaskSection {
    pub fn metric(&self) -> DissimilarityMetric {
        match self.metric {
            MetricKind::Levenshtein => DissimilarityMetric::Levenshtein,
            MetricKind::KmerTanimoto => DissimilarityMetric::KmerTanimoto {
                k: self.k,
                bits: self.bits,
            },
        }
    }

    pub fn to_task(&self) -> Result<ToyTask, String> {
        if self.alphabet_size == 0 || self.alphabet_size > 26 {
            return Err(format!("alphabet_size must lie in 1..=26, got {}", self.alphabet_size));
        }
        if self.length == 0 {
            return Err("length must be positive".into());
        }
        if self.metric == MetricKind::KmerTanimoto && (self.k == 0 || self.bits == 0) {
            return Err("kmer_tanimoto needs positive k and bits".into());
        }
        let mut anchors = Vec::with_capacity(self.anchors.len());
        for a in &self.anchors {
            let tokens = letters_to_tokens(a).map_err(|e| format!("anchor {a:?}: {e}"))?;
            if let Some(&t) = tokens.iter().find(|&&t| t as usize >= self.alphabet_size) {
                return Err(format!("anchor {a:?} uses symbol {} outside the alphabet", t as usize));
            }
            anchors.push(tokens);
        }
        let utility = AnchorUtility::new(anchors, self.length).map_err(|e| e.to_string())?;
        Ok(ToyTask {
            alphabet_size: self.alphabet_size,
            length: self.length,
            order: self.order,
            utility,
            metric: self.metric(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub temperatures: Vec<f64>,
    pub samples_per_point: usize,
    pub seeds: Vec<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            temperatures: (1..=12).map(|i| i as f64 / 10.0).collect(),
            samples_per_point: 128,
            seeds: (0..5).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Checkpoint period in steps; 0 keeps only the initial and final policies.
    pub checkpoint_every: usize,
    /// Model name written into checkpoints and sweep rows; defaults to the training mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("runs"),
            checkpoint_every: 50,
            model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub task: TaskSection,
    pub train: TrainConfig,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parses and validates `text`; `path` only labels error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            ConfigError::Parse {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate(path)?;
        Ok(cfg)
    }

    pub fn validate(&self, path: &Path) -> Result<(), ConfigError> {
        let invalid = |section, message| ConfigError::Invalid {
            path: path.to_path_buf(),
            section,
            message,
        };
        self.task.to_task().map_err(|m| invalid("task", m))?;
        self.train.validate().map_err(|e| invalid("train", e.to_string()))?;
        if self.sweep.samples_per_point == 0 {
            return Err(invalid("sweep", "samples_per_point must be positive".into()));
        }
        if let Some(t) = self.sweep.temperatures.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(invalid("sweep", format!("temperatures must be positive, got {t}")));
        }
        if let Some(model) = &self.output.model {
            if model.is_empty() || model.contains(|c: char| c.is_whitespace() || c == '/') {
                return Err(invalid("output", format!("model name {model:?} must be nonempty without spaces or '/'")));
            }
        }
        Ok(())
    }

    pub fn task(&self) -> ToyTask {
        self.task.to_task().expect("validated on load")
    }

    pub fn model_name(&self) -> String {
        self.output.model.clone().unwrap_or_else(|| self.train.mode.to_string())
    }

    /// Normalized TOML with every default spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}
