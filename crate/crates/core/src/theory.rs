//! Empirical checks of two properties of normalized pairwise diversity.
//!
//! *Partition consistency*: averaged over uniformly random balanced partitions
//! of `N = M·K` items into `M` groups of `K`, the mean group diversity equals
//! the diversity of all `N` items. Each pair shares a group with probability
//! `(K−1)/(N−1)`, which cancels the normalizers exactly.
//!
//! *Concentration*: for i.i.d. items,
//! `P(|D̄_{M,K} − D_N| ≥ ε) ≤ 4 exp(−½ M ⌊K/2⌋ ε²)`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diversity::{pairwise_matrix, set_diversity, Dissimilarity, PairwiseMatrix};
use crate::error::{Error, Result};
use crate::policy::PolicyParams;
use crate::rng::{label_hash, substream, Stream};
use crate::rollout::Candidate;
use crate::scalar::Scalar;

/// Largest number of balanced partitions the exhaustive check will enumerate.
pub const ENUMERATION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Exhaustive,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCheckReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub d_full: f64,
    pub mean_small_group: f64,
    pub n_partitions: usize,
    pub mode: CheckMode,
    pub abs_error: f64,
    /// Monte-Carlo standard error of the mean; 0 for exhaustive enumeration.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub m: usize,
    pub k: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub empirical_freq: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub max_deviation: f64,
}

/// `4 exp(−½ M ⌊K/2⌋ ε²)`.
pub fn concentration_bound(m: usize, k: usize, epsilon: f64) -> f64 {
    4.0 * (-0.5 * m as f64 * (k / 2) as f64 * epsilon * epsilon).exp()
}

/// Number of unordered balanced partitions, `N! / (M! (K!)^M)`.
pub fn balanced_partition_count(m: usize, k: usize) -> f64 {
    let mut count = 1.0;
    // place groups one at a time: the smallest unplaced item picks K−1 partners
    let mut remaining = m * k;
    for _ in 0..m {
        count *= binomial(remaining - 1, k - 1);
        remaining -= k;
    }
    count
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_shape<T: Scalar>(d: &PairwiseMatrix<T>, m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidParameter("M and K must be positive".into()));
    }
    if d.n() != m * k {
        return Err(Error::InvalidParameter(format!(
            "matrix has {} items but M·K = {}",
            d.n(),
            m * k
        )));
    }
    Ok(())
}

/// `D̄_{M,K}` for the partition given by consecutive blocks of `order`.
pub fn mean_group_diversity<T: Scalar>(d: &PairwiseMatrix<T>, order: &[usize], k: usize) -> T {
    let groups: Vec<T> = order.chunks(k).map(|g| set_diversity(&d.select(g))).collect();
    groups.iter().copied().sum::<T>() / T::count(groups.len())
}

/// Enumerates every balanced partition (groups canonicalised by their smallest
/// member) and compares the mean small-group diversity with `D_N`.
pub fn exhaustive_partition_check<T: Scalar>(d: &PairwiseMatrix<T>, m: usize, k: usize) -> Result<PartitionCheckReport> {
    check_shape(d, m, k)?;
    let count = balanced_partition_count(m, k);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let n = m * k;
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut total = T::zero();
    let mut visited = 0usize;
    enumerate(d, k, &mut used, &mut order, &mut |order| {
        total += mean_group_diversity(d, order, k);
        visited += 1;
    });
    let mean = total / T::count(visited);
    let full = set_diversity(d);
    Ok(PartitionCheckReport {
        n,
        m,
        k,
        d_full: full.as_f64(),
        mean_small_group: mean.as_f64(),
        n_partitions: visited,
        mode: CheckMode::Exhaustive,
        abs_error: (mean - full).abs().as_f64(),
        std_error: 0.0,
    })
}

fn enumerate<T: Scalar>(
    d: &PairwiseMatrix<T>,
    k: usize,
    used: &mut [bool],
    order: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    let Some(first) = used.iter().position(|&u| !u) else {
        visit(order);
        return;
    };
    used[first] = true;
    order.push(first);
    choose_partners(d, k, first + 1, k - 1, used, order, visit);
    order.pop();
    used[first] = false;
}

fn choose_partners<T: Scalar>(
    d: &PairwiseMatrix<T>,
    k: usize,
    from: usize,
    needed: usize,
    used: &mut [bool],
    order: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if needed == 0 {
        enumerate(d, k, used, order, visit);
        return;
    }
    for j in from..used.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        order.push(j);
        choose_partners(d, k, j + 1, needed - 1, used, order, visit);
        order.pop();
        used[j] = false;
    }
}

/// Symmetric matrix with i.i.d. uniform `[0, 1)` off-diagonal entries.
pub fn random_matrix(n: usize, seed: u64) -> PairwiseMatrix<f64> {
    let mut rng = substream(seed, label_hash("random-matrix"), n as u64, 0);
    PairwiseMatrix::from_fn(n, |_, _| rng.gen())
}

/// Uniformly random balanced partition as a permutation read in blocks of `K`.
pub fn random_partition(n: usize, rng: &mut Stream) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Averages `D̄_{M,K}` over `n_partitions` seeded random partitions.
pub fn mc_partition_check<T: Scalar>(
    d: &PairwiseMatrix<T>,
    m: usize,
    k: usize,
    n_partitions: usize,
    seed: u64,
) -> Result<PartitionCheckReport> {
    check_shape(d, m, k)?;
    if n_partitions == 0 {
        return Err(Error::InvalidParameter("need at least one partition".into()));
    }
    let n = m * k;
    let domain = label_hash("partition");
    let values: Vec<f64> = (0..n_partitions)
        .map(|t| {
            let order = random_partition(n, &mut substream(seed, domain, t as u64, 0));
            mean_group_diversity(d, &order, k).as_f64()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / n_partitions as f64;
    let std_error = if n_partitions > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_partitions - 1) as f64;
        (var / n_partitions as f64).sqrt()
    } else {
        0.0
    };
    let full = set_diversity(d).as_f64();
    Ok(PartitionCheckReport {
        n,
        m,
        k,
        d_full: full,
        mean_small_group: mean,
        n_partitions,
        mode: CheckMode::MonteCarlo,
        abs_error: (mean - full).abs(),
        std_error,
    })
}

/// Fraction of seeded random partitions placing items `i` and `j` in the same group.
pub fn same_group_frequency(m: usize, k: usize, pair: (usize, usize), trials: usize, seed: u64) -> f64 {
    let n = m * k;
    let domain = label_hash("partition");
    let hits = (0..trials)
        .filter(|&t| {
            let order = random_partition(n, &mut substream(seed, domain, t as u64, 0));
            let pos_i = order.iter().position(|&x| x == pair.0).unwrap();
            let pos_j = order.iter().position(|&x| x == pair.1).unwrap();
            pos_i / k == pos_j / k
        })
        .count();
    hits as f64 / trials as f64
}

/// Source of i.i.d. items for the concentration check.
pub trait ItemSampler {
    fn draw(&self, rng: &mut Stream) -> Vec<u8>;
}

impl ItemSampler for PolicyParams {
    fn draw(&self, rng: &mut Stream) -> Vec<u8> {
        self.sample_sequence(1.0, rng)
    }
}

impl<F: Fn(&mut Stream) -> Vec<u8>> ItemSampler for F {
    fn draw(&self, rng: &mut Stream) -> Vec<u8> {
        self(rng)
    }
}

/// Per trial: draws `M·K` i.i.d. items, partitions them at random and records
/// whether `|D̄_{M,K} − D_N| ≥ ε`.
pub fn concentration_check<S: ItemSampler + ?Sized, D: Dissimilarity<f64> + ?Sized>(
    sampler: &S,
    metric: &D,
    m: usize,
    k: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if m == 0 || k == 0 || trials == 0 {
        return Err(Error::InvalidParameter("M, K and trials must be positive".into()));
    }
    let n = m * k;
    let domain = label_hash("concentration");
    let mut exceed = 0usize;
    let mut max_deviation = 0.0f64;
    for t in 0..trials {
        let mut rng = substream(seed, domain, t as u64, 0);
        let items: Vec<Candidate<f64>> = (0..n).map(|_| Candidate::new(sampler.draw(&mut rng))).collect();
        let d = pairwise_matrix(&items, metric);
        let order = random_partition(n, &mut rng);
        let deviation = (mean_group_diversity(&d, &order, k) - set_diversity(&d)).abs();
        max_deviation = max_deviation.max(deviation);
        if deviation >= epsilon {
            exceed += 1;
        }
    }
    let empirical_freq = exceed as f64 / trials as f64;
    let bound = concentration_bound(m, k, epsilon);
    Ok(ConcentrationReport {
        m,
        k,
        epsilon,
        trials,
        empirical_freq,
        bound,
        satisfied: empirical_freq <= bound,
        max_deviation,
    })
}
