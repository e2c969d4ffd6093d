use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgrpo_core::frontier::sweep;
use sgrpo_core::rollout::DecodeParams;
use sgrpo_core::{OperatingPoint64, PolicyParams};

use crate::config::ExperimentConfig;
use crate::error::{io_err, CliError, Result};
use crate::train::parse_label;

/// One CSV row: an operating point of one model at one temperature and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub mode: String,
    pub temperature: f64,
    pub seed: u64,
    #[serde(rename = "U")]
    pub utility: f64,
    #[serde(rename = "V")]
    pub diversity: f64,
    pub n_samples: usize,
}

impl SweepRow {
    pub fn from_point(model: &str, mode: &str, p: &OperatingPoint64) -> Self {
        Self {
            model: model.to_string(),
            mode: mode.to_string(),
            temperature: p.decode.temperature,
            seed: p.decode.seed,
            utility: p.utility,
            diversity: p.diversity,
            n_samples: p.n_samples,
        }
    }

    pub fn to_point(&self) -> OperatingPoint64 {
        OperatingPoint64 {
            utility: self.utility,
            diversity: self.diversity,
            decode: DecodeParams {
                temperature: self.temperature,
                seed: self.seed,
            },
            n_samples: self.n_samples,
        }
    }
}

/// A loaded checkpoint with the model name and mode recorded in its label.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: String,
    pub mode: String,
    pub policy: PolicyParams,
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedModel> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let (policy, label) = PolicyParams::from_checkpoint(&text).map_err(|source| CliError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })?;
    let (mut model, mode) = parse_label(&label);
    if model.is_empty() {
        model = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(LoadedModel { model, mode, policy })
}

/// Renames models whose label is shared by several checkpoints: the file stem
/// is appended (`sgrpo@step_000300`), or the whole path when stems collide too.
pub fn disambiguate(models: &mut [LoadedModel], paths: &[PathBuf]) {
    let count = |names: &[String], name: &str| names.iter().filter(|n| *n == name).count();
    let labels: Vec<String> = models.iter().map(|m| m.model.clone()).collect();
    let stemmed: Vec<String> = labels
        .iter()
        .zip(paths)
        .map(|(label, path)| {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            format!("{label}@{stem}")
        })
        .collect();
    for (i, m) in models.iter_mut().enumerate() {
        if count(&labels, &labels[i]) > 1 {
            m.model = if count(&stemmed, &stemmed[i]) > 1 {
                format!("{}@{}", labels[i], paths[i].display())
            } else {
                stemmed[i].clone()
            };
        }
    }
}

/// Sweeps every model over the configured temperatures and seeds. Rows come
/// out ordered by model, then seed, then temperature.
pub fn run_sweep(models: &[LoadedModel], cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let task = cfg.task();
    let mut rows = Vec::new();
    for m in models {
        let p = &m.policy;
        if p.alphabet_size() != task.alphabet_size || p.length() != task.length {
            return Err(CliError::Input(format!(
                "model {} has alphabet {} and length {}, but the task expects {} and {}",
                m.model,
                p.alphabet_size(),
                p.length(),
                task.alphabet_size,
                task.length
            )));
        }
        for &seed in &cfg.sweep.seeds {
            let points: Vec<OperatingPoint64> = sweep(
                p,
                &cfg.sweep.temperatures,
                cfg.sweep.samples_per_point,
                &task.metric,
                &task.utility,
                seed,
            )?;
            rows.extend(points.iter().map(|pt| SweepRow::from_point(&m.model, &m.mode, pt)));
        }
    }
    Ok(rows)
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let csv_err = |source| CliError::Csv {
        path: PathBuf::from(path),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
