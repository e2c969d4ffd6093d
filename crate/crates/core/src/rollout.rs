//! Candidates, groups and same-condition supergroups.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::diversity::{levenshtein_distance, Fingerprint};
use crate::error::{Error, Result};
use crate::policy::PolicyParams;
use crate::rng::rollout_stream;
use crate::scalar::Scalar;

/// One generated sequence with its cached utility and fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T: Scalar = f64> {
    pub tokens: Vec<u8>,
    pub utility: Option<T>,
    pub valid: bool,
    fingerprint: OnceLock<Fingerprint>,
}

impl<T: Scalar> Candidate<T> {
    pub fn new(tokens: Vec<u8>) -> Self {
        Self {
            tokens,
            utility: None,
            valid: true,
            fingerprint: OnceLock::new(),
        }
    }

    pub fn with_utility(tokens: Vec<u8>, utility: T) -> Self {
        let mut c = Self::new(tokens);
        c.utility = Some(utility);
        c
    }

    /// k-mer fingerprint, computed on first use for a given `(k, bits)` and
    /// cached. A request with different parameters is computed fresh.
    pub fn fingerprint(&self, k: usize, bits: usize) -> std::borrow::Cow<'_, Fingerprint> {
        let cached = self
            .fingerprint
            .get_or_init(|| Fingerprint::of_kmers(&self.tokens, k, bits));
        if cached.k() == k && cached.width() == bits {
            std::borrow::Cow::Borrowed(cached)
        } else {
            std::borrow::Cow::Owned(Fingerprint::of_kmers(&self.tokens, k, bits))
        }
    }
}

/// `K` candidates sampled under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Group<T: Scalar = f64> {
    pub members: Vec<Candidate<T>>,
}

impl<T: Scalar> Group<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    #[serde(default)]
    pub payload: Vec<u8>,
}

impl Condition {
    /// The single empty condition of the unconditional toy task.
    pub fn unconditional() -> Self {
        Self {
            id: "unconditional".into(),
            payload: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub temperature: f64,
    pub seed: u64,
}

impl DecodeParams {
    pub fn new(temperature: f64, seed: u64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(Self { temperature, seed })
    }
}

/// `M` groups of `K` rollouts sharing one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Supergroup<T: Scalar = f64> {
    pub condition: Condition,
    pub groups: Vec<Group<T>>,
    pub decode: DecodeParams,
}

impl<T: Scalar> Supergroup<T> {
    /// Builds a supergroup from explicit token groups (all unscored).
    pub fn from_tokens(condition: Condition, decode: DecodeParams, groups: Vec<Vec<Vec<u8>>>) -> Self {
        Self {
            condition,
            decode,
            groups: groups
                .into_iter()
                .map(|g| Group {
                    members: g.into_iter().map(Candidate::new).collect(),
                })
                .collect(),
        }
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Size of the first group; all groups have equal size.
    pub fn group_size(&self) -> usize {
        self.groups.first().map_or(0, Group::len)
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(Group::len).sum()
    }

    pub fn candidates(&self) -> impl Iterator<Item = &Candidate<T>> {
        self.groups.iter().flat_map(|g| g.members.iter())
    }

    /// Utilities as an `M × K` table; fails on the first unscored rollout.
    pub fn utilities(&self) -> Result<Vec<Vec<T>>> {
        self.groups
            .iter()
            .enumerate()
            .map(|(m, g)| {
                g.members
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.utility.ok_or(Error::Unscored { m, i }))
                    .collect()
            })
            .collect()
    }

    /// Same rollouts regrouped into a single group of `N` (the GRPO view).
    pub fn flattened(&self) -> Self {
        Self {
            condition: self.condition.clone(),
            decode: self.decode,
            groups: vec![Group {
                members: self.candidates().cloned().collect(),
            }],
        }
    }
}

/// Scalar utility of a sequence under a condition.
pub trait UtilityFn: Sync {
    fn utility(&self, tokens: &[u8], condition: &Condition) -> f64;
}

impl<F: Fn(&[u8], &Condition) -> f64 + Sync> UtilityFn for F {
    fn utility(&self, tokens: &[u8], condition: &Condition) -> f64 {
        self(tokens, condition)
    }
}

/// `u(x) = max_j (1 − lev(x, a_j) / L)` over a fixed anchor set.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorUtility {
    anchors: Vec<Vec<u8>>,
    length: usize,
}

impl AnchorUtility {
    pub fn new(anchors: Vec<Vec<u8>>, length: usize) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidParameter("anchor set is empty".into()));
        }
        if length == 0 {
            return Err(Error::InvalidParameter("sequence length must be positive".into()));
        }
        if let Some(a) = anchors.iter().find(|a| a.len() != length) {
            return Err(Error::InvalidParameter(format!(
                "anchor length {} differs from sequence length {length}",
                a.len()
            )));
        }
        Ok(Self { anchors, length })
    }

    /// Three mutually distant period-4 anchors over an alphabet of 8:
    /// `ABCD…`, `EFGH…`, `ACEG…`.
    pub fn default_anchors(length: usize) -> Vec<Vec<u8>> {
        [[0u8, 1, 2, 3], [4, 5, 6, 7], [0, 2, 4, 6]]
            .iter()
            .map(|period| (0..length).map(|t| period[t % 4]).collect())
            .collect()
    }

    pub fn anchors(&self) -> &[Vec<u8>] {
        &self.anchors
    }
}

impl UtilityFn for AnchorUtility {
    fn utility(&self, tokens: &[u8], _condition: &Condition) -> f64 {
        let l = self.length as f64;
        self.anchors
            .iter()
            .map(|a| 1.0 - levenshtein_distance(tokens, a) as f64 / l)
            .fold(0.0, f64::max)
            .clamp(0.0, 1.0)
    }
}

/// Samples `M × K` independent rollouts. Rollout `(m, i)` draws from its own
/// substream keyed by `(decode.seed, condition.id, m, i)`.
pub fn sample_supergroup<T: Scalar>(
    policy: &PolicyParams,
    condition: &Condition,
    groups: usize,
    group_size: usize,
    decode: DecodeParams,
) -> Supergroup<T> {
    let groups = (0..groups)
        .map(|m| Group {
            members: (0..group_size)
                .map(|i| {
                    let mut rng = rollout_stream(decode.seed, &condition.id, m, i);
                    Candidate::new(policy.sample_sequence(decode.temperature, &mut rng))
                })
                .collect(),
        })
        .collect();
    Supergroup {
        condition: condition.clone(),
        groups,
        decode,
    }
}

/// Fills every utility with `utility(tokens, condition)` clipped to `[0, 1]`.
pub fn score_utilities<T: Scalar, U: UtilityFn + ?Sized>(mut sg: Supergroup<T>, utility: &U) -> Result<Supergroup<T>> {
    for (m, group) in sg.groups.iter_mut().enumerate() {
        for (i, c) in group.members.iter_mut().enumerate() {
            let u = utility.utility(&c.tokens, &sg.condition);
            if u.is_nan() {
                return Err(Error::NanUtility { m, i });
            }
            c.utility = Some(T::of(u.clamp(0.0, 1.0)));
        }
    }
    Ok(sg)
}

/// Renders tokens as letters (`0 → 'A'`).
pub fn tokens_to_letters(tokens: &[u8]) -> String {
    tokens.iter().map(|&t| (b'A' + t) as char).collect()
}

/// Parses an uppercase letter string (`'A' → 0`).
pub fn letters_to_tokens(s: &str) -> Result<Vec<u8>> {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' => Ok(b - b'A'),
            _ => Err(Error::InvalidParameter(format!("symbol `{}` is not an uppercase letter", b as char))),
        })
        .collect()
}
