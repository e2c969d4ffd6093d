//! Index–bucket neighborhood memory for the memory-gated GRPO baseline.
//!
//! A candidate whose utility exceeds `eta` is compared against every index.
//! With no index at similarity `>= gamma` it founds a new neighborhood; a
//! match with room in its bucket is stored; a match with a full bucket has its
//! utility suppressed to zero.

use serde::{Deserialize, Serialize};

use crate::diversity::Dissimilarity;
use crate::error::{Error, Result};
use crate::rollout::Candidate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryConfig {
    /// Score threshold η; only utilities strictly above it query the memory.
    pub eta: f64,
    /// Similarity cutoff γ.
    pub gamma: f64,
    /// Bucket capacity C.
    pub capacity: usize,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            eta: 0.9,
            gamma: 0.4,
            capacity: 25,
        }
    }
}

impl MemoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) || !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter("memory eta and gamma must lie in [0, 1]".into()));
        }
        if self.capacity == 0 {
            return Err(Error::InvalidParameter("memory capacity must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub index: Candidate<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryState {
    pub entries: Vec<MemoryEntry>,
}

/// What the memory did with one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateOutcome {
    BelowThreshold,
    NewIndex,
    Stored { index: usize },
    Suppressed { index: usize },
}

impl MemoryState {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Gates one utility through the memory, updating the memory in place.
/// The first index (in creation order) at similarity `>= gamma` is the match.
pub fn memory_gate<D: Dissimilarity<f64> + ?Sized>(
    candidate: &Candidate<f64>,
    utility: f64,
    memory: &mut MemoryState,
    cfg: &MemoryConfig,
    metric: &D,
) -> (f64, GateOutcome) {
    if utility <= cfg.eta {
        return (utility, GateOutcome::BelowThreshold);
    }
    let matched = memory
        .entries
        .iter()
        .position(|e| 1.0 - metric.dissimilarity(candidate, &e.index) >= cfg.gamma);
    match matched {
        None => {
            memory.entries.push(MemoryEntry {
                index: candidate.clone(),
                count: 1,
            });
            (utility, GateOutcome::NewIndex)
        }
        Some(index) if memory.entries[index].count < cfg.capacity => {
            memory.entries[index].count += 1;
            (utility, GateOutcome::Stored { index })
        }
        Some(index) => (0.0, GateOutcome::Suppressed { index }),
    }
}
