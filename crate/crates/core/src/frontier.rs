//! Utility–diversity operating points and frontier indicators.
//!
//! HV is measured on the non-dominated subset; DIP and R2 use every point of a
//! sweep.

use serde::{Deserialize, Serialize};

use crate::diversity::{pairwise_matrix, set_diversity, Dissimilarity};
use crate::error::{Error, Result};
use crate::policy::PolicyParams;
use crate::rng::{label_hash, substream};
use crate::rollout::{Candidate, Condition, DecodeParams, UtilityFn};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OperatingPoint<T: Scalar = f64> {
    /// Mean utility `U`.
    pub utility: T,
    /// Set diversity `V`.
    pub diversity: T,
    pub decode: DecodeParams,
    pub n_samples: usize,
}

impl<T: Scalar> OperatingPoint<T> {
    /// Bare `(U, V)` point with a placeholder decode label.
    pub fn at(utility: T, diversity: T) -> Self {
        Self {
            utility,
            diversity,
            decode: DecodeParams {
                temperature: 1.0,
                seed: 0,
            },
            n_samples: 0,
        }
    }

    /// `self` weakly dominates `other` in both objectives and strictly in one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.utility >= other.utility
            && self.diversity >= other.diversity
            && (self.utility > other.utility || self.diversity > other.diversity)
    }
}

/// Non-dominated subset; exact `(U, V)` duplicates keep their first occurrence.
pub fn non_dominated<T: Scalar>(points: &[OperatingPoint<T>]) -> Vec<OperatingPoint<T>> {
    let mut unique: Vec<OperatingPoint<T>> = Vec::with_capacity(points.len());
    for p in points {
        if !unique.iter().any(|q| q.utility == p.utility && q.diversity == p.diversity) {
            unique.push(*p);
        }
    }
    unique
        .iter()
        .filter(|p| !unique.iter().any(|q| q.dominates(p)))
        .copied()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Hypervolume<T: Scalar = f64> {
    pub value: T,
    /// Points lying below the reference in some coordinate (zero contribution).
    pub clipped: usize,
}

/// Area of `∪ [r_U, U] × [r_V, V]` over the non-dominated points, by sorting
/// on `U` and summing disjoint horizontal strips.
pub fn hypervolume<T: Scalar>(points: &[OperatingPoint<T>], reference: (T, T)) -> Hypervolume<T> {
    let (ru, rv) = reference;
    let clipped = points
        .iter()
        .filter(|p| p.utility < ru || p.diversity < rv)
        .count();
    let inside: Vec<OperatingPoint<T>> = points
        .iter()
        .filter(|p| p.utility >= ru && p.diversity >= rv)
        .copied()
        .collect();
    let mut front = non_dominated(&inside);
    front.sort_by(|a, b| b.utility.partial_cmp(&a.utility).expect("finite utilities"));
    let mut value = T::zero();
    let mut floor = rv;
    for p in front {
        if p.diversity > floor {
            value += (p.utility - ru) * (p.diversity - floor);
            floor = p.diversity;
        }
    }
    Hypervolume { value, clipped }
}

/// Minimum Euclidean distance from any point to `ideal`.
pub fn dip<T: Scalar>(points: &[OperatingPoint<T>], ideal: (T, T)) -> Result<T> {
    points
        .iter()
        .map(|p| ((ideal.0 - p.utility).powi(2) + (ideal.1 - p.diversity).powi(2)).sqrt())
        .reduce(T::min)
        .ok_or(Error::EmptyPointSet)
}

/// `{(ℓ/(n−1), 1 − ℓ/(n−1))}` for `ℓ = 0..n`; the default grid has 101 weights.
pub fn weight_grid<T: Scalar>(n: usize) -> Vec<(T, T)> {
    let last = T::count(n.saturating_sub(1).max(1));
    (0..n)
        .map(|l| {
            let w = T::count(l) / last;
            (w, T::one() - w)
        })
        .collect()
}

/// Mean over weights of the best weighted Tchebycheff shortfall to `ideal`.
pub fn r2<T: Scalar>(points: &[OperatingPoint<T>], weights: &[(T, T)], ideal: (T, T)) -> Result<T> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if weights.is_empty() {
        return Err(Error::InvalidParameter("empty weight grid".into()));
    }
    let total: T = weights
        .iter()
        .map(|&(wu, wv)| {
            points
                .iter()
                .map(|p| (wu * (ideal.0 - p.utility)).max(wv * (ideal.1 - p.diversity)))
                .fold(T::infinity(), T::min)
        })
        .sum();
    Ok(total / T::count(weights.len()))
}

/// Componentwise minimum over every point of every compared model.
pub fn shared_reference<T: Scalar>(sets: &[&[OperatingPoint<T>]]) -> Option<(T, T)> {
    sets.iter()
        .flat_map(|s| s.iter())
        .map(|p| (p.utility, p.diversity))
        .reduce(|a, b| (a.0.min(b.0), a.1.min(b.1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FrontierReport<T: Scalar = f64> {
    #[serde(rename = "ref")]
    pub reference: (T, T),
    pub ideal: (T, T),
    pub points: Vec<OperatingPoint<T>>,
    pub nd: Vec<OperatingPoint<T>>,
    pub hv: T,
    pub dip: T,
    pub r2: T,
}

impl<T: Scalar> FrontierReport<T> {
    /// Indicators against `reference`, ideal `(1, 1)` and the 101-weight grid.
    pub fn build(points: Vec<OperatingPoint<T>>, reference: (T, T)) -> Result<Self> {
        let ideal = (T::one(), T::one());
        Ok(Self {
            reference,
            ideal,
            nd: non_dominated(&points),
            hv: hypervolume(&points, reference).value,
            dip: dip(&points, ideal)?,
            r2: r2(&points, &weight_grid(101), ideal)?,
            points,
        })
    }
}

/// Mean and 95% half-width `1.96 · s / √n` (sample standard deviation).
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mu = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mu, 0.0);
    }
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mu, 1.96 * (var / n as f64).sqrt())
}

/// Decodes `samples_per_point` sequences at each temperature and reports the
/// mean utility and the set diversity of the valid samples. Sample `j` at
/// temperature `τ` draws from the substream keyed by `(seed, "sweep", bits(τ), j)`.
pub fn sweep<T: Scalar, D: Dissimilarity<T> + ?Sized, U: UtilityFn + ?Sized>(
    policy: &PolicyParams,
    temperatures: &[f64],
    samples_per_point: usize,
    metric: &D,
    utility: &U,
    seed: u64,
) -> Result<Vec<OperatingPoint<T>>> {
    if temperatures.is_empty() {
        return Err(Error::InvalidParameter("decode grid is empty".into()));
    }
    let condition = Condition::unconditional();
    let domain = label_hash("sweep");
    temperatures
        .iter()
        .map(|&tau| {
            let decode = DecodeParams::new(tau, seed)?;
            let samples: Vec<Candidate<T>> = (0..samples_per_point)
                .map(|j| {
                    let mut rng = substream(seed, domain, tau.to_bits(), j as u64);
                    let tokens = policy.sample_sequence(tau, &mut rng);
                    let u = T::of(utility.utility(&tokens, &condition).clamp(0.0, 1.0));
                    Candidate::with_utility(tokens, u)
                })
                .filter(|c| c.valid)
                .collect();
            let mean_u = if samples.is_empty() {
                T::zero()
            } else {
                samples.iter().map(|c| c.utility.expect("scored")).sum::<T>() / T::count(samples.len())
            };
            let v = set_diversity(&pairwise_matrix(&samples, metric));
            Ok(OperatingPoint {
                utility: mean_u.max(T::zero()).min(T::one()),
                diversity: v.max(T::zero()).min(T::one()),
                decode,
                n_samples: samples.len(),
            })
        })
        .collect()
}
