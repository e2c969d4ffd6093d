use serde::Serialize;
use sgrpo_core::theory::{
    concentration_check, exhaustive_partition_check, mc_partition_check, random_matrix, CheckMode,
};
use sgrpo_core::{ConcentrationReport, PartitionCheckReport, ToyTask};

use crate::error::{CliError, Result};

/// Exhaustive checks must reproduce the identity to this tolerance.
pub const EXACT_TOLERANCE: f64 = 1e-12;
/// Monte-Carlo checks pass within this many standard errors.
pub const MC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub enum VerifyRequest {
    Partition {
        mode: CheckMode,
        n: usize,
        m: usize,
        k: usize,
        /// Number of random dissimilarity matrices to test.
        matrices: usize,
        /// Random partitions per matrix in Monte-Carlo mode.
        partitions: usize,
        seed: u64,
    },
    Concentration {
        m: usize,
        k: usize,
        epsilon: f64,
        trials: usize,
        seed: u64,
        task: ToyTask,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum VerifyReport {
    Partition {
        passed: bool,
        mode: CheckMode,
        tolerance: f64,
        max_abs_error: f64,
        reports: Vec<PartitionCheckReport>,
    },
    Concentration {
        passed: bool,
        #[serde(flatten)]
        report: ConcentrationReport,
    },
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        match self {
            Self::Partition { passed, .. } | Self::Concentration { passed, .. } => *passed,
        }
    }
}

pub fn run_verify(req: &VerifyRequest) -> Result<VerifyReport> {
    match *req {
        VerifyRequest::Partition {
            mode,
            n,
            m,
            k,
            matrices,
            partitions,
            seed,
        } => {
            if m == 0 || k == 0 || m * k != n {
                return Err(CliError::Usage(format!("N must equal M·K, got N={n}, M={m}, K={k}")));
            }
            if matrices == 0 {
                return Err(CliError::Usage("--matrices must be at least 1".into()));
            }
            let mut reports = Vec::with_capacity(matrices);
            for i in 0..matrices as u64 {
                let d = random_matrix(n, seed.wrapping_add(i));
                reports.push(match mode {
                    CheckMode::Exhaustive => exhaustive_partition_check(&d, m, k)?,
                    CheckMode::MonteCarlo => mc_partition_check(&d, m, k, partitions, seed.wrapping_add(i))?,
                });
            }
            let passed = reports.iter().all(|r| match mode {
                CheckMode::Exhaustive => r.abs_error < EXACT_TOLERANCE,
                CheckMode::MonteCarlo => r.abs_error <= MC_SIGMAS * r.std_error,
            });
            let max_abs_error = reports.iter().map(|r| r.abs_error).fold(0.0, f64::max);
            Ok(VerifyReport::Partition {
                passed,
                mode,
                tolerance: match mode {
                    CheckMode::Exhaustive => EXACT_TOLERANCE,
                    CheckMode::MonteCarlo => MC_SIGMAS,
                },
                max_abs_error,
                reports,
            })
        }
        VerifyRequest::Concentration {
            m,
            k,
            epsilon,
            trials,
            seed,
            ref task,
        } => {
            if !(epsilon > 0.0) || m == 0 || k == 0 || trials == 0 {
                return Err(CliError::Usage("concentration needs M, K, trials ≥ 1 and eps > 0".into()));
            }
            let policy = task.initial_policy()?;
            let report = concentration_check(&policy, &task.metric, m, k, epsilon, trials, seed)?;
            Ok(VerifyReport::Concentration {
                passed: report.satisfied,
                report,
            })
        }
    }
}
