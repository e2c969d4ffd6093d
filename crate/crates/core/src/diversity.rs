//! Pairwise dissimilarities, normalized pairwise set diversity and
//! leave-one-out contributions.
//!
//! A group's dissimilarity matrix is built once (each unordered pair evaluated
//! exactly once) and then reused for both the set diversity and every
//! leave-one-out contribution.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rollout::Candidate;
use crate::scalar::Scalar;

/// Fixed-width bit set of hashed k-mers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    k: usize,
    width: usize,
    words: Vec<u64>,
}

/// Hash of one k-mer window: 64-bit multiply-xorshift over the symbol indices.
///
/// ```text
/// h = 0x243F6A8885A308D3
/// for s in window { h ^= s + 1; h *= 0x9E3779B97F4A7C15; h ^= h >> 29 }
/// ```
///
/// (wrapping arithmetic). The bit index is `h mod B`.
pub fn kmer_hash(window: &[u8]) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for &s in window {
        h ^= u64::from(s) + 1;
        h = h.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 29;
    }
    h
}

impl Fingerprint {
    pub fn empty(width: usize) -> Self {
        Self {
            k: 0,
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    /// Sets bit `kmer_hash(w) mod width` for every contiguous window `w` of length `k`.
    /// Sequences shorter than `k` have no windows and give the empty set.
    pub fn of_kmers(tokens: &[u8], k: usize, width: usize) -> Self {
        assert!(width >= 1 && k >= 1, "fingerprint needs k >= 1 and width >= 1");
        let mut fp = Self::empty(width);
        fp.k = k;
        if tokens.len() >= k {
            for w in tokens.windows(k) {
                fp.insert((kmer_hash(w) % width as u64) as usize);
            }
        }
        fp
    }

    pub fn from_bits(width: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Self::empty(width);
        for b in bits {
            fp.insert(b);
        }
        fp
    }

    fn insert(&mut self, bit: usize) {
        assert!(bit < self.width, "bit {bit} outside width {}", self.width);
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn bits(&self) -> Vec<usize> {
        (0..self.width)
            .filter(|&b| self.words[b / 64] >> (b % 64) & 1 == 1)
            .collect()
    }
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets treated as identical (similarity 1).
pub fn tanimoto_similarity<T: Scalar>(a: &Fingerprint, b: &Fingerprint) -> T {
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    // bits beyond the shorter set still belong to the union
    let (longer, shorter) = if a.words.len() >= b.words.len() { (a, b) } else { (b, a) };
    union += longer.words[shorter.words.len()..]
        .iter()
        .map(|w| w.count_ones())
        .sum::<u32>();
    if union == 0 {
        return T::one();
    }
    T::count(inter as usize) / T::count(union as usize)
}

/// Edit distance with unit insertion, deletion and substitution costs.
pub fn levenshtein_distance(a: &[u8], b: &[u8]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    if short.len() <= 64 {
        bit_parallel_distance(short, long)
    } else {
        dp_distance(short, long)
    }
}

/// Myers/Hyyrö bit-vector edit distance; `pattern.len()` must be in `1..=64`.
fn bit_parallel_distance(pattern: &[u8], text: &[u8]) -> usize {
    let m = pattern.len();
    let mut peq = [0u64; 256];
    for (i, &c) in pattern.iter().enumerate() {
        peq[c as usize] |= 1 << i;
    }
    let mut pv = if m == 64 { !0 } else { (1u64 << m) - 1 };
    let mut mv = 0u64;
    let top = 1u64 << (m - 1);
    let mut score = m;
    for &c in text {
        let eq = peq[c as usize];
        let xv = eq | mv;
        let xh = ((eq & pv).wrapping_add(pv) ^ pv) | eq;
        let mut ph = mv | !(xh | pv);
        let mut mh = pv & xh;
        if ph & top != 0 {
            score += 1;
        } else if mh & top != 0 {
            score -= 1;
        }
        ph = (ph << 1) | 1;
        mh <<= 1;
        pv = mh | !(xv | ph);
        mv = ph & xv;
    }
    score
}

fn dp_distance(a: &[u8], b: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=a.len()).collect();
    let mut cur = vec![0; a.len() + 1];
    for (j, &cb) in b.iter().enumerate() {
        cur[0] = j + 1;
        for (i, &ca) in a.iter().enumerate() {
            let sub = prev[i] + usize::from(ca != cb);
            cur[i + 1] = sub.min(prev[i + 1] + 1).min(cur[i] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[a.len()]
}

/// `1 − lev(x, y) / max(|x|, |y|)`; 1 when both are empty.
pub fn levenshtein_similarity<T: Scalar>(x: &[u8], y: &[u8]) -> T {
    let longest = x.len().max(y.len());
    if longest == 0 {
        return T::one();
    }
    T::one() - T::count(levenshtein_distance(x, y)) / T::count(longest)
}

/// Symmetric dissimilarity in `[0, 1]` with `d(x, x) = 0`.
pub trait Dissimilarity<T: Scalar>: Sync {
    fn dissimilarity(&self, a: &Candidate<T>, b: &Candidate<T>) -> T;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DissimilarityMetric {
    /// `1 − Tanimoto` of k-mer fingerprints `B` bits wide.
    KmerTanimoto { k: usize, bits: usize },
    /// `1 − normalized Levenshtein similarity`.
    #[default]
    Levenshtein,
}

impl DissimilarityMetric {
    pub fn kmer_tanimoto() -> Self {
        Self::KmerTanimoto { k: 3, bits: 256 }
    }

    /// Dissimilarity between raw token sequences.
    pub fn between<T: Scalar>(&self, a: &[u8], b: &[u8]) -> T {
        match *self {
            Self::Levenshtein => T::one() - levenshtein_similarity::<T>(a, b),
            Self::KmerTanimoto { k, bits } => {
                T::one() - tanimoto_similarity::<T>(&Fingerprint::of_kmers(a, k, bits), &Fingerprint::of_kmers(b, k, bits))
            }
        }
    }
}

impl<T: Scalar> Dissimilarity<T> for DissimilarityMetric {
    fn dissimilarity(&self, a: &Candidate<T>, b: &Candidate<T>) -> T {
        match *self {
            Self::Levenshtein => T::one() - levenshtein_similarity::<T>(&a.tokens, &b.tokens),
            Self::KmerTanimoto { k, bits } => T::one() - tanimoto_similarity::<T>(&a.fingerprint(k, bits), &b.fingerprint(k, bits)),
        }
    }
}

/// Wraps a metric and counts evaluations.
#[derive(Debug, Default)]
pub struct Counted<M> {
    pub inner: M,
    calls: AtomicUsize,
}

impl<M> Counted<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<T: Scalar, M: Dissimilarity<T>> Dissimilarity<T> for Counted<M> {
    fn dissimilarity(&self, a: &Candidate<T>, b: &Candidate<T>) -> T {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.dissimilarity(a, b)
    }
}

/// Symmetric `n × n` dissimilarity matrix with zero diagonal (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PairwiseMatrix<T: Scalar = f64> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Scalar> PairwiseMatrix<T> {
    /// Fills the matrix from `f(i, j)` evaluated once for each `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        Self { n, entries }
    }

    /// Validates a dense row-major matrix.
    pub fn from_entries(n: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: entries.len(),
            });
        }
        for i in 0..n {
            if entries[i * n + i] != T::zero() {
                return Err(Error::InvalidMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..n {
                let d = entries[i * n + j];
                if d != entries[j * n + i] {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
                if !(d >= T::zero() && d <= T::one()) {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) = {d} outside [0, 1]")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// `Σ_{i<j} d_ij`.
    pub fn upper_sum(&self) -> T {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum()
    }

    /// Principal submatrix on `indices` (no metric evaluations).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), |a, b| self.get(indices[a], indices[b]))
    }
}

/// Dissimilarity matrix of a group; each unordered pair is evaluated once.
pub fn pairwise_matrix<T: Scalar, D: Dissimilarity<T> + ?Sized>(group: &[Candidate<T>], metric: &D) -> PairwiseMatrix<T> {
    PairwiseMatrix::from_fn(group.len(), |i, j| metric.dissimilarity(&group[i], &group[j]))
}

/// Normalized pairwise diversity `2/(n(n−1)) Σ_{i<j} d_ij`; 0 for `n < 2`.
pub fn set_diversity<T: Scalar>(m: &PairwiseMatrix<T>) -> T {
    pair_mean(m.upper_sum(), m.n())
}

fn pair_mean<T: Scalar>(pair_sum: T, n: usize) -> T {
    if n < 2 {
        return T::zero();
    }
    pair_sum * T::count(2) / (T::count(n) * T::count(n - 1))
}

/// `c_i = D(G) − D(G ∖ {x_i})` from the cached matrix: removing `i` subtracts
/// its row sum from the pair total.
pub fn loo_contributions<T: Scalar>(m: &PairwiseMatrix<T>) -> Result<Vec<T>> {
    let n = m.n();
    if n < 2 {
        return Err(Error::GroupTooSmall);
    }
    let total = m.upper_sum();
    let full = pair_mean(total, n);
    Ok((0..n)
        .map(|i| {
            let row: T = m.row(i).iter().copied().sum();
            full - pair_mean(total - row, n - 1)
        })
        .collect())
}
