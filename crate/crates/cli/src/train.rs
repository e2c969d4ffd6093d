use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sgrpo_core::{Error as CoreError, PolicyParams, StepLog, TrainMode, Trainer};

use crate::config::ExperimentConfig;
use crate::error::{io_err, CliError, Result};

pub const LOG_FILE: &str = "log.jsonl";
pub const CHECKPOINT_DIR: &str = "checkpoints";

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model: String,
    pub mode: TrainMode,
    pub steps: usize,
    pub last: Option<StepLog>,
    pub checkpoints: Vec<PathBuf>,
    pub log: PathBuf,
}

pub fn checkpoint_label(model: &str, mode: TrainMode) -> String {
    format!("{model}/{mode}")
}

/// Splits a checkpoint label into `(model, mode)`; labels without a mode keep
/// the whole string as the model name.
pub fn parse_label(label: &str) -> (String, String) {
    match label.rsplit_once('/') {
        Some((model, mode)) if !model.is_empty() => (model.to_string(), mode.to_string()),
        _ => (label.to_string(), String::new()),
    }
}

pub fn checkpoint_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(CHECKPOINT_DIR).join(format!("step_{step:06}.ckpt"))
}

fn write_checkpoint(dir: &Path, step: usize, policy: &PolicyParams, label: &str) -> Result<PathBuf> {
    let path = checkpoint_path(dir, step);
    fs::write(&path, policy.to_checkpoint(label)).map_err(io_err(&path))?;
    Ok(path)
}

/// Trains under `cfg`, writing the normalized config, checkpoints and a JSONL
/// step log into `out`. On a non-finite advantage the offending bundle is
/// dumped as JSON next to the log.
pub fn run_train(cfg: &ExperimentConfig, out: &Path) -> Result<TrainSummary> {
    let ckpt_dir = out.join(CHECKPOINT_DIR);
    fs::create_dir_all(&ckpt_dir).map_err(io_err(&ckpt_dir))?;
    let config_path = out.join("config.toml");
    fs::write(&config_path, cfg.to_toml()).map_err(io_err(&config_path))?;

    let model = cfg.model_name();
    let label = checkpoint_label(&model, cfg.train.mode);
    let every = cfg.output.checkpoint_every;
    let mut trainer = Trainer::new(cfg.train.clone(), cfg.task())?;
    let mut checkpoints = vec![write_checkpoint(out, 0, &trainer.policy, &label)?];

    let log_path = out.join(LOG_FILE);
    let file = fs::File::create(&log_path).map_err(io_err(&log_path))?;
    let mut log = BufWriter::new(file);
    let mut last = None;
    for _ in 0..cfg.train.steps {
        let output = match trainer.step() {
            Ok(output) => output,
            Err(CoreError::NonFinite { step, what, bundle }) => {
                log.flush().map_err(io_err(&log_path))?;
                let dump = out.join(format!("nonfinite_step_{step:06}.json"));
                let json = serde_json::to_string_pretty(&bundle).expect("bundle serializes");
                fs::write(&dump, json).map_err(io_err(&dump))?;
                return Err(CliError::NonFinite { step, what, dump });
            }
            Err(e) => return Err(e.into()),
        };
        let line = serde_json::to_string(&output.log).expect("step log serializes");
        writeln!(log, "{line}").map_err(io_err(&log_path))?;
        let done = trainer.steps_done();
        if (every > 0 && done % every == 0) || done == cfg.train.steps {
            checkpoints.push(write_checkpoint(out, done, &trainer.policy, &label)?);
        }
        last = Some(output.log);
    }
    log.flush().map_err(io_err(&log_path))?;
    Ok(TrainSummary {
        model,
        mode: cfg.train.mode,
        steps: cfg.train.steps,
        last,
        checkpoints,
        log: log_path,
    })
}

pub fn read_log(path: &Path) -> Result<Vec<StepLog>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}
