//! Supergroup-relative advantages.
//!
//! Pipeline for one supergroup of `M` groups with `K` rollouts each:
//!
//! 1. group diversity `R_m = D(G_m)`;
//! 2. group signal `A^grp_m = M/(M−1) (R_m − mean(R))`;
//! 3. leave-one-out contributions `c_{m,i} = D(G_m) − D(G_m ∖ x_{m,i})`;
//! 4. standardized `z = (c − mean c) / (popstd c + ζ)` and weights
//!    `w± = K · softmax(±z / τ_c)`;
//! 5. redistributed reward
//!    `R̃_{m,i} = R_m + [A^grp_m]_+ (w+_{m,i} − 1) − [−A^grp_m]_+ (w−_{m,i} − 1)`;
//! 6. composed reward `r̂ = (1 − λ) r + λ R̃`, centered over all `MK`
//!    rollouts with the leave-one-out factor `MK/(MK − 1)`.

use serde::{Deserialize, Serialize};

use crate::diversity::{loo_contributions, pairwise_matrix, set_diversity, Dissimilarity, PairwiseMatrix};
use crate::error::{Error, Result};
use crate::rollout::Supergroup;
use crate::scalar::{mean, population_std, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreditMode {
    /// Sign-aware redistribution by leave-one-out contribution.
    #[default]
    Loo,
    /// Every member receives its group's diversity unchanged.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields, default)]
pub struct SgrpoHyperparams<T: Scalar = f64> {
    /// Diversity weight λ in `[0, 1]`.
    pub lambda: T,
    /// Contribution temperature τ_c.
    pub tau_c: T,
    /// Standardization guard ζ.
    pub zeta: T,
    pub credit_mode: CreditMode,
}

impl<T: Scalar> Default for SgrpoHyperparams<T> {
    fn default() -> Self {
        Self {
            lambda: T::of(0.5),
            tau_c: T::one(),
            zeta: T::of(1e-8),
            credit_mode: CreditMode::Loo,
        }
    }
}

impl<T: Scalar> SgrpoHyperparams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= T::zero() && self.lambda <= T::one()) {
            return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if !(self.tau_c > T::zero()) {
            return Err(Error::InvalidParameter(format!("tau_c must be positive, got {}", self.tau_c)));
        }
        if !(self.zeta > T::zero()) {
            return Err(Error::InvalidParameter(format!("zeta must be positive, got {}", self.zeta)));
        }
        Ok(())
    }
}

/// Leave-one-out comparison of group diversities within one supergroup.
pub fn group_relative_signal<T: Scalar>(diversities: &[T]) -> Result<Vec<T>> {
    let m = diversities.len();
    if m < 2 {
        return Err(Error::TooFewGroups);
    }
    let avg = mean(diversities);
    let factor = T::count(m) / T::count(m - 1);
    Ok(diversities.iter().map(|&r| factor * (r - avg)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedistributionWeights<T: Scalar> {
    pub standardized: Vec<T>,
    pub plus: Vec<T>,
    pub minus: Vec<T>,
}

/// Sign-aware softmax weights over standardized contributions; each vector sums to `K`.
pub fn redistribution_weights<T: Scalar>(contributions: &[T], tau_c: T, zeta: T) -> RedistributionWeights<T> {
    let avg = mean(contributions);
    let scale = population_std(contributions) + zeta;
    let standardized: Vec<T> = contributions.iter().map(|&c| (c - avg) / scale).collect();
    let plus = scaled_softmax(&standardized, T::one() / tau_c);
    let minus = scaled_softmax(&standardized, -T::one() / tau_c);
    RedistributionWeights {
        standardized,
        plus,
        minus,
    }
}

/// `K · softmax(scale · z)`.
fn scaled_softmax<T: Scalar>(z: &[T], scale: T) -> Vec<T> {
    let logits: Vec<T> = z.iter().map(|&x| x * scale).collect();
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    let k = T::count(z.len());
    exps.into_iter().map(|e| k * e / total).collect()
}

/// Spreads a group's diversity signal over its members.
pub fn redistribute<T: Scalar>(
    group_diversity: T,
    group_signal: T,
    w_plus: &[T],
    w_minus: &[T],
    mode: CreditMode,
) -> Result<Vec<T>> {
    if w_plus.len() != w_minus.len() {
        return Err(Error::LengthMismatch {
            expected: w_plus.len(),
            actual: w_minus.len(),
        });
    }
    Ok(match mode {
        CreditMode::Uniform => vec![group_diversity; w_plus.len()],
        CreditMode::Loo => {
            let pos = group_signal.max(T::zero());
            let neg = (-group_signal).max(T::zero());
            w_plus
                .iter()
                .zip(w_minus)
                .map(|(&wp, &wm)| group_diversity + pos * (wp - T::one()) - neg * (wm - T::one()))
                .collect()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centered<T: Scalar> {
    pub composed: Vec<Vec<T>>,
    pub mean_composed: T,
    pub advantages: Vec<Vec<T>>,
}

/// Composes `r̂ = (1 − λ) r + λ R̃` and centers it over the whole supergroup.
pub fn compose_and_center<T: Scalar>(utilities: &[Vec<T>], redistributed: &[Vec<T>], lambda: T) -> Result<Centered<T>> {
    if utilities.len() != redistributed.len() {
        return Err(Error::LengthMismatch {
            expected: utilities.len(),
            actual: redistributed.len(),
        });
    }
    for (u, r) in utilities.iter().zip(redistributed) {
        if u.len() != r.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                actual: r.len(),
            });
        }
    }
    let total: usize = utilities.iter().map(Vec::len).sum();
    if total < 2 {
        return Err(Error::TooFewRollouts(total));
    }
    let keep = T::one() - lambda;
    let composed: Vec<Vec<T>> = utilities
        .iter()
        .zip(redistributed)
        .map(|(u, r)| u.iter().zip(r).map(|(&u, &r)| keep * u + lambda * r).collect())
        .collect();
    let mean_composed = composed.iter().flatten().copied().sum::<T>() / T::count(total);
    let factor = T::count(total) / T::count(total - 1);
    let advantages = composed
        .iter()
        .map(|row| row.iter().map(|&x| factor * (x - mean_composed)).collect())
        .collect();
    Ok(Centered {
        composed,
        mean_composed,
        advantages,
    })
}

/// Every intermediate of the advantage pipeline for one supergroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdvantageBundle<T: Scalar = f64> {
    pub lambda: T,
    pub utilities: Vec<Vec<T>>,
    pub group_diversities: Vec<T>,
    pub group_signals: Vec<T>,
    pub contributions: Vec<Vec<T>>,
    pub standardized: Vec<Vec<T>>,
    pub weights_plus: Vec<Vec<T>>,
    pub weights_minus: Vec<Vec<T>>,
    pub redistributed: Vec<Vec<T>>,
    pub composed: Vec<Vec<T>>,
    pub mean_composed: T,
    pub advantages: Vec<Vec<T>>,
}

/// Largest violations of the bundle's algebraic invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantResiduals<T> {
    /// `max_m |Σ_i w±_{m,i} − K|` over both weight vectors.
    pub weight_sum: T,
    /// `max_m |mean_i R̃_{m,i} − R_m|`.
    pub mean_preservation: T,
    /// `|Σ_{m,i} A_{m,i}|`.
    pub advantage_sum: T,
}

impl<T: Scalar> AdvantageBundle<T> {
    pub fn flat_advantages(&self) -> Vec<T> {
        self.advantages.iter().flatten().copied().collect()
    }

    pub fn residuals(&self) -> InvariantResiduals<T> {
        let mut weight_sum = T::zero();
        let mut mean_preservation = T::zero();
        for m in 0..self.group_diversities.len() {
            let k = T::count(self.weights_plus[m].len());
            let sp: T = self.weights_plus[m].iter().copied().sum();
            let sm: T = self.weights_minus[m].iter().copied().sum();
            weight_sum = weight_sum.max((sp - k).abs()).max((sm - k).abs());
            mean_preservation = mean_preservation.max((mean(&self.redistributed[m]) - self.group_diversities[m]).abs());
        }
        InvariantResiduals {
            weight_sum,
            mean_preservation,
            advantage_sum: self.advantages.iter().flatten().copied().sum::<T>().abs(),
        }
    }
}

/// Full pipeline on a scored supergroup.
///
/// `M = 1` is accepted only with `λ = 0` (the utility-only baseline); its group
/// signal is 0. Singleton groups have diversity 0 and contribution 0, so `K = 1`
/// reduces to `(1 − λ)` times the utility-only advantages.
pub fn supergroup_advantages<T: Scalar, D: Dissimilarity<T> + ?Sized>(
    sg: &Supergroup<T>,
    metric: &D,
    hyper: &SgrpoHyperparams<T>,
) -> Result<AdvantageBundle<T>> {
    let utilities = sg.utilities()?;
    let matrices: Vec<PairwiseMatrix<T>> = sg.groups.iter().map(|g| pairwise_matrix(&g.members, metric)).collect();
    advantages_from_matrices(&utilities, &matrices, hyper)
}

/// Pipeline on precomputed utilities and per-group dissimilarity matrices.
pub fn advantages_from_matrices<T: Scalar>(
    utilities: &[Vec<T>],
    matrices: &[PairwiseMatrix<T>],
    hyper: &SgrpoHyperparams<T>,
) -> Result<AdvantageBundle<T>> {
    hyper.validate()?;
    if utilities.len() != matrices.len() {
        return Err(Error::LengthMismatch {
            expected: utilities.len(),
            actual: matrices.len(),
        });
    }
    let k = utilities.first().map_or(0, Vec::len);
    for (u, d) in utilities.iter().zip(matrices) {
        if u.len() != k || d.n() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                actual: if u.len() != k { u.len() } else { d.n() },
            });
        }
    }
    if k == 0 {
        return Err(Error::TooFewRollouts(0));
    }
    let group_diversities: Vec<T> = matrices.iter().map(set_diversity).collect();
    let group_signals = if utilities.len() == 1 && hyper.lambda == T::zero() {
        vec![T::zero()]
    } else {
        group_relative_signal(&group_diversities)?
    };

    let m_count = utilities.len();
    let mut contributions = Vec::with_capacity(m_count);
    let mut standardized = Vec::with_capacity(m_count);
    let mut weights_plus = Vec::with_capacity(m_count);
    let mut weights_minus = Vec::with_capacity(m_count);
    let mut redistributed = Vec::with_capacity(m_count);
    for (m, d) in matrices.iter().enumerate() {
        let c = if k == 1 { vec![T::zero()] } else { loo_contributions(d)? };
        let w = redistribution_weights(&c, hyper.tau_c, hyper.zeta);
        redistributed.push(redistribute(
            group_diversities[m],
            group_signals[m],
            &w.plus,
            &w.minus,
            hyper.credit_mode,
        )?);
        contributions.push(c);
        standardized.push(w.standardized);
        weights_plus.push(w.plus);
        weights_minus.push(w.minus);
    }
    let centered = compose_and_center(utilities, &redistributed, hyper.lambda)?;
    Ok(AdvantageBundle {
        lambda: hyper.lambda,
        utilities: utilities.to_vec(),
        group_diversities,
        group_signals,
        contributions,
        standardized,
        weights_plus,
        weights_minus,
        redistributed,
        composed: centered.composed,
        mean_composed: centered.mean_composed,
        advantages: centered.advantages,
    })
}

/// Utility-only advantages over all rollouts: `N/(N−1) (r − mean r)`.
pub fn grpo_advantages<T: Scalar>(utilities: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let zeros: Vec<Vec<T>> = utilities.iter().map(|u| vec![T::zero(); u.len()]).collect();
    Ok(compose_and_center(utilities, &zeros, T::zero())?.advantages)
}
