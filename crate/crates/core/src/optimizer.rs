//! Clipped-surrogate training loop for SGRPO and its baselines.
//!
//! Each step snapshots `θ_old ← θ`, samples one supergroup from `θ_old` at
//! temperature 1, turns utilities (and, for SGRPO, group diversity) into
//! advantages, and applies one Adam update to
//!
//! ```text
//! L(θ) = (1/N) Σ_n [ −min(ρ_n A_n, clip(ρ_n, 1−ε, 1+ε) A_n) + β KL_n(θ ‖ ref) ]
//! ```
//!
//! where `ρ_n = π_θ(x_n) / π_θ_old(x_n)` and `KL_n` sums the exact per-step
//! categorical KL over the contexts visited by rollout `n`.

use serde::{Deserialize, Serialize};

use crate::advantage::{supergroup_advantages, AdvantageBundle, SgrpoHyperparams};
use crate::diversity::{pairwise_matrix, set_diversity, DissimilarityMetric};
use crate::error::{Error, Result};
use crate::memory::{memory_gate, MemoryConfig, MemoryState};
use crate::policy::PolicyParams;
use crate::rng::step_seed;
use crate::rollout::{sample_supergroup, score_utilities, AnchorUtility, Condition, DecodeParams, Supergroup};

/// Sampling temperature used for training rollouts.
pub const TRAIN_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Sgrpo,
    Grpo,
    MemoryGrpo,
}

impl TrainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sgrpo => "sgrpo",
            Self::Grpo => "grpo",
            Self::MemoryGrpo => "memory_grpo",
        }
    }
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub mode: TrainMode,
    /// Groups per supergroup `M` (baselines sample one group of `M·K`).
    pub groups: usize,
    /// Rollouts per group `K`.
    pub group_size: usize,
    pub hyper: SgrpoHyperparams<f64>,
    pub clip_eps: f64,
    pub kl_beta: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub steps: usize,
    pub seed: u64,
    /// Reference refresh period in steps; 0 disables refreshing.
    pub ref_sync_every: usize,
    pub ref_mixup: f64,
    pub memory: MemoryConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::Sgrpo,
            groups: 8,
            group_size: 8,
            hyper: SgrpoHyperparams::default(),
            clip_eps: 0.2,
            kl_beta: 0.01,
            learning_rate: 0.05,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            steps: 300,
            seed: 0,
            ref_sync_every: 64,
            ref_mixup: 0.6,
            memory: MemoryConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.groups == 0 || self.group_size == 0 {
            return bad("groups and group_size must be at least 1".into());
        }
        if self.mode == TrainMode::Sgrpo && self.groups < 2 {
            return bad("sgrpo needs at least two groups per supergroup".into());
        }
        if self.groups * self.group_size < 2 {
            return bad("a step needs at least two rollouts".into());
        }
        self.hyper.validate()?;
        if !(self.clip_eps > 0.0) {
            return bad(format!("clip_eps must be positive, got {}", self.clip_eps));
        }
        if !(self.kl_beta >= 0.0) {
            return bad(format!("kl_beta must be nonnegative, got {}", self.kl_beta));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || !(self.adam_eps > 0.0) {
            return bad("adam constants must satisfy 0 <= beta < 1 and eps > 0".into());
        }
        if !(0.0..=1.0).contains(&self.ref_mixup) {
            return bad(format!("ref_mixup must lie in [0, 1], got {}", self.ref_mixup));
        }
        if self.mode == TrainMode::MemoryGrpo {
            self.memory.validate()?;
        }
        Ok(())
    }

    /// Rollouts per step; identical across modes for equal `groups · group_size`.
    pub fn rollouts_per_step(&self) -> usize {
        self.groups * self.group_size
    }

    /// `(M, K)` actually sampled: baselines use one group holding every rollout.
    pub fn sampling_shape(&self) -> (usize, usize) {
        match self.mode {
            TrainMode::Sgrpo => (self.groups, self.group_size),
            TrainMode::Grpo | TrainMode::MemoryGrpo => (1, self.rollouts_per_step()),
        }
    }

    /// Advantage hyperparameters for the configured mode (λ forced to 0 for baselines).
    pub fn effective_hyper(&self) -> SgrpoHyperparams<f64> {
        match self.mode {
            TrainMode::Sgrpo => self.hyper,
            TrainMode::Grpo | TrainMode::MemoryGrpo => SgrpoHyperparams {
                lambda: 0.0,
                ..self.hyper
            },
        }
    }
}

/// Fixed-length toy generation task.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyTask {
    pub alphabet_size: usize,
    pub length: usize,
    pub order: usize,
    pub utility: AnchorUtility,
    pub metric: DissimilarityMetric,
}

impl ToyTask {
    /// Alphabet 8, length 16, bigram contexts, three anchors, Levenshtein diversity.
    pub fn default_task() -> Self {
        Self {
            alphabet_size: 8,
            length: 16,
            order: 2,
            utility: AnchorUtility::new(AnchorUtility::default_anchors(16), 16).expect("default anchors are valid"),
            metric: DissimilarityMetric::Levenshtein,
        }
    }

    pub fn initial_policy(&self) -> Result<PolicyParams> {
        PolicyParams::uniform(self.alphabet_size, self.order, self.length)
    }
}

/// One JSONL training-log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub mode: TrainMode,
    pub mean_utility: f64,
    pub mean_group_diversity: f64,
    pub supergroup_diversity: f64,
    pub kl: f64,
    pub loss: f64,
    pub clip_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_size: Option<usize>,
}

/// Value and gradient of the clipped objective at `policy`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub loss: f64,
    /// Mean clipped surrogate (before negation).
    pub surrogate: f64,
    /// Mean per-rollout KL to the reference.
    pub kl: f64,
    pub clip_fraction: f64,
    /// Dense gradient laid out like the policy logits.
    pub grad: Vec<f64>,
}

/// Evaluates the clipped objective on recorded rollouts. `old_log_probs[n]`
/// is `log π_θ_old(x_n)`; the surrogate gradient is zero wherever the clipped
/// branch attains the minimum.
pub fn clipped_objective(
    policy: &PolicyParams,
    reference: &PolicyParams,
    rollouts: &[Vec<u8>],
    advantages: &[f64],
    old_log_probs: &[f64],
    clip_eps: f64,
    kl_beta: f64,
) -> ObjectiveEval {
    let n = rollouts.len() as f64;
    let mut grad = vec![0.0; policy.logits().len()];
    let (mut surrogate, mut kl, mut clipped) = (0.0, 0.0, 0usize);
    for ((tokens, &adv), &old) in rollouts.iter().zip(advantages).zip(old_log_probs) {
        let ratio = (policy.sequence_log_prob(tokens) - old).exp();
        let bounded = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
        if (ratio - 1.0).abs() > clip_eps {
            clipped += 1;
        }
        let unclipped_term = ratio * adv;
        let clipped_term = bounded * adv;
        if unclipped_term <= clipped_term {
            surrogate += unclipped_term;
            if adv != 0.0 {
                policy.accumulate_log_prob_grad(tokens, -unclipped_term / n, &mut grad);
            }
        } else {
            surrogate += clipped_term;
        }
        if kl_beta != 0.0 {
            kl += policy.token_kl(reference, tokens);
            policy.accumulate_kl_grad(reference, tokens, kl_beta / n, &mut grad);
        } else {
            kl += policy.token_kl(reference, tokens);
        }
    }
    surrogate /= n;
    kl /= n;
    ObjectiveEval {
        loss: -surrogate + kl_beta * kl,
        surrogate,
        kl,
        clip_fraction: clipped as f64 / n,
        grad,
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, learning_rate: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            eps,
            first: vec![0.0; len],
            second: vec![0.0; len],
            t: 0,
        }
    }

    /// Descends `params` along `grad`.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Training state carried across steps.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub cfg: TrainConfig,
    pub task: ToyTask,
    pub policy: PolicyParams,
    pub reference: PolicyParams,
    pub memory: MemoryState,
    pub condition: Condition,
    adam: Adam,
    step: usize,
}

/// Output of one step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub log: StepLog,
    pub supergroup: Supergroup<f64>,
    pub bundle: AdvantageBundle<f64>,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, task: ToyTask) -> Result<Self> {
        cfg.validate()?;
        let policy = task.initial_policy()?;
        Ok(Self::with_policy(cfg, task, policy))
    }

    /// Starts from `policy`, which also becomes the initial reference.
    pub fn with_policy(cfg: TrainConfig, task: ToyTask, policy: PolicyParams) -> Self {
        let adam = Adam::new(
            policy.logits().len(),
            cfg.learning_rate,
            cfg.adam_beta1,
            cfg.adam_beta2,
            cfg.adam_eps,
        );
        Self {
            reference: policy.clone(),
            policy,
            memory: MemoryState::default(),
            condition: Condition::unconditional(),
            adam,
            step: 0,
            cfg,
            task,
        }
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    /// Samples and scores the supergroup for the current step from `old`.
    pub fn rollouts(&self, old: &PolicyParams) -> Result<Supergroup<f64>> {
        let (m, k) = self.cfg.sampling_shape();
        let decode = DecodeParams::new(TRAIN_TEMPERATURE, step_seed(self.cfg.seed, self.step as u64))?;
        let sg = sample_supergroup(old, &self.condition, m, k, decode);
        score_utilities(sg, &self.task.utility)
    }

    /// One optimisation step (one update per rollout batch).
    pub fn step(&mut self) -> Result<StepOutput> {
        let old = self.policy.clone();
        let mut sg = self.rollouts(&old)?;
        let raw = sg.utilities()?;
        let mean_utility = raw.iter().flatten().sum::<f64>() / sg.total() as f64;

        if self.cfg.mode == TrainMode::MemoryGrpo {
            let metric = self.task.metric;
            for group in &mut sg.groups {
                for c in &mut group.members {
                    let u = c.utility.expect("scored");
                    let (gated, _) = memory_gate(c, u, &mut self.memory, &self.cfg.memory, &metric);
                    c.utility = Some(gated);
                }
            }
        }

        let bundle = supergroup_advantages(&sg, &self.task.metric, &self.cfg.effective_hyper())?;
        let tokens: Vec<Vec<u8>> = sg.candidates().map(|c| c.tokens.clone()).collect();
        let old_log_probs: Vec<f64> = tokens.iter().map(|t| old.sequence_log_prob(t)).collect();
        let advantages = bundle.flat_advantages();
        let eval = clipped_objective(
            &self.policy,
            &self.reference,
            &tokens,
            &advantages,
            &old_log_probs,
            self.cfg.clip_eps,
            self.cfg.kl_beta,
        );
        let non_finite = |what| Error::NonFinite {
            step: self.step,
            what,
            bundle: Box::new(bundle.clone()),
        };
        if !eval.loss.is_finite() {
            return Err(non_finite("loss"));
        }
        if eval.grad.iter().any(|g| !g.is_finite()) {
            return Err(non_finite("gradient"));
        }
        self.adam.update(self.policy.logits_mut(), &eval.grad);
        if self.policy.logits().iter().any(|x| !x.is_finite()) {
            return Err(non_finite("parameters"));
        }

        let all: Vec<_> = sg.candidates().cloned().collect();
        let supergroup_diversity = set_diversity(&pairwise_matrix(&all, &self.task.metric));
        let log = StepLog {
            step: self.step,
            mode: self.cfg.mode,
            mean_utility,
            mean_group_diversity: bundle.group_diversities.iter().sum::<f64>() / bundle.group_diversities.len() as f64,
            supergroup_diversity,
            kl: eval.kl,
            loss: eval.loss,
            clip_fraction: eval.clip_fraction,
            memory_size: (self.cfg.mode == TrainMode::MemoryGrpo).then(|| self.memory.len()),
        };

        self.step += 1;
        if self.cfg.ref_sync_every > 0 && self.step.is_multiple_of(self.cfg.ref_sync_every) {
            self.reference.mix_toward(&self.policy, self.cfg.ref_mixup);
        }
        Ok(StepOutput {
            log,
            supergroup: sg,
            bundle,
        })
    }
}

/// Policies saved during a run, keyed by the number of completed steps.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub policy: PolicyParams,
    pub logs: Vec<StepLog>,
    pub checkpoints: Vec<(usize, PolicyParams)>,
}

/// Runs `cfg.steps` steps. Checkpoints are taken before the first step, after
/// every `checkpoint_every` steps (0 disables) and after the last step.
pub fn train(cfg: &TrainConfig, task: &ToyTask, checkpoint_every: usize) -> Result<TrainRun> {
    let mut trainer = Trainer::new(cfg.clone(), task.clone())?;
    let mut checkpoints = vec![(0, trainer.policy.clone())];
    let mut logs = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        logs.push(trainer.step()?.log);
        let done = trainer.steps_done();
        if (checkpoint_every > 0 && done % checkpoint_every == 0) || done == cfg.steps {
            checkpoints.push((done, trainer.policy.clone()));
        }
    }
    Ok(TrainRun {
        policy: trainer.policy,
        logs,
        checkpoints,
    })
}
