//! Supergroup-relative policy optimization with diversity-aware credit
//! assignment, on a small tabular sequence model.
//!
//! Rollouts are sampled as `M` groups of `K`. Each group's diversity becomes a
//! group-level signal, which is handed back to the members in proportion to
//! their leave-one-out contribution and blended with the per-rollout utility
//! before centering across the whole supergroup.
//!
//! The numeric core (diversity, advantages, frontier indicators, partition
//! checks) is generic over [`Scalar`]; the `*64` and `*32` aliases below fix the
//! precision.

pub mod advantage;
pub mod diversity;
pub mod error;
pub mod frontier;
pub mod memory;
pub mod optimizer;
pub mod policy;
pub mod rng;
pub mod rollout;
pub mod scalar;
pub mod theory;

pub use advantage::{
    grpo_advantages, supergroup_advantages, AdvantageBundle, CreditMode, InvariantResiduals, SgrpoHyperparams,
};
pub use diversity::{
    loo_contributions, pairwise_matrix, set_diversity, Dissimilarity, DissimilarityMetric, Fingerprint, PairwiseMatrix,
};
pub use error::{Error, Result};
pub use frontier::{FrontierReport, Hypervolume, OperatingPoint};
pub use memory::{memory_gate, GateOutcome, MemoryConfig, MemoryState};
pub use optimizer::{train, StepLog, ToyTask, TrainConfig, TrainMode, TrainRun, Trainer};
pub use policy::PolicyParams;
pub use rollout::{AnchorUtility, Candidate, Condition, DecodeParams, Group, Supergroup, UtilityFn};
pub use scalar::Scalar;
pub use theory::{ConcentrationReport, PartitionCheckReport};

pub type AdvantageBundle64 = AdvantageBundle<f64>;
pub type AdvantageBundle32 = AdvantageBundle<f32>;
pub type SgrpoHyperparams64 = SgrpoHyperparams<f64>;
pub type SgrpoHyperparams32 = SgrpoHyperparams<f32>;
pub type PairwiseMatrix64 = PairwiseMatrix<f64>;
pub type PairwiseMatrix32 = PairwiseMatrix<f32>;
pub type Supergroup64 = Supergroup<f64>;
pub type Supergroup32 = Supergroup<f32>;
pub type OperatingPoint64 = OperatingPoint<f64>;
pub type OperatingPoint32 = OperatingPoint<f32>;
pub type FrontierReport64 = FrontierReport<f64>;
pub type FrontierReport32 = FrontierReport<f32>;
