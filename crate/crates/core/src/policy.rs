//! Tabular n-gram sequence policy.
//!
//! The policy emits fixed-length sequences left to right. The next-symbol
//! distribution is a softmax over one logit row per context, where a context is
//! the previous `order` symbols with positions before the sequence start padded
//! by a begin-of-sequence marker. Contexts are encoded in base `A + 1` (the
//! marker takes digit `A`), so the table holds `(A + 1)^order` rows of `A`
//! logits each. Rows whose context can never occur (a marker after a real
//! symbol) are kept for a simple dense layout and stay at their initial value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

/// Tag written on the first line of every checkpoint.
pub const CHECKPOINT_TAG: &str = "sgrpo-policy v1";

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    alphabet_size: usize,
    order: usize,
    length: usize,
    logits: Vec<f64>,
}

/// Sparse gradient of a scalar with respect to the logit table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradTable {
    entries: BTreeMap<(usize, usize), f64>,
}

impl GradTable {
    pub fn get(&self, context: usize, symbol: usize) -> Option<f64> {
        self.entries.get(&(context, symbol)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `((context, symbol), value)` pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Contexts that carry at least one entry.
    pub fn contexts(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.entries.keys().map(|&(c, _)| c).collect();
        out.dedup();
        out
    }
}

impl PolicyParams {
    /// Policy with all logits zero (uniform next-symbol distribution).
    pub fn uniform(alphabet_size: usize, order: usize, length: usize) -> Result<Self> {
        Self::check_shape(alphabet_size, order, length)?;
        let rows = (alphabet_size + 1).pow(order as u32);
        Ok(Self {
            alphabet_size,
            order,
            length,
            logits: vec![0.0; rows * alphabet_size],
        })
    }

    pub fn from_logits(alphabet_size: usize, order: usize, length: usize, logits: Vec<f64>) -> Result<Self> {
        Self::check_shape(alphabet_size, order, length)?;
        let rows = (alphabet_size + 1).pow(order as u32);
        if logits.len() != rows * alphabet_size {
            return Err(Error::LengthMismatch {
                expected: rows * alphabet_size,
                actual: logits.len(),
            });
        }
        if logits.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("logits must be finite".into()));
        }
        Ok(Self {
            alphabet_size,
            order,
            length,
            logits,
        })
    }

    fn check_shape(alphabet_size: usize, order: usize, length: usize) -> Result<()> {
        if !(1..=256).contains(&alphabet_size) {
            return Err(Error::InvalidParameter(format!(
                "alphabet size must be in [1, 256], got {alphabet_size}"
            )));
        }
        if length == 0 {
            return Err(Error::InvalidParameter("sequence length must be positive".into()));
        }
        let rows = (alphabet_size as u128 + 1).checked_pow(order as u32);
        match rows {
            Some(r) if r * alphabet_size as u128 <= 1 << 26 => Ok(()),
            _ => Err(Error::InvalidParameter(format!(
                "context table too large for alphabet {alphabet_size} and order {order}"
            ))),
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn num_contexts(&self) -> usize {
        self.logits.len() / self.alphabet_size
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn row(&self, context: usize) -> &[f64] {
        let a = self.alphabet_size;
        &self.logits[context * a..(context + 1) * a]
    }

    pub fn row_mut(&mut self, context: usize) -> &mut [f64] {
        let a = self.alphabet_size;
        &mut self.logits[context * a..(context + 1) * a]
    }

    pub fn same_shape(&self, other: &PolicyParams) -> bool {
        self.alphabet_size == other.alphabet_size && self.order == other.order && self.length == other.length
    }

    /// Context index used to emit position `t` of `tokens`.
    pub fn context_at(&self, tokens: &[u8], t: usize) -> usize {
        let base = self.alphabet_size + 1;
        let mut ctx = 0;
        for back in (1..=self.order).rev() {
            let digit = if t >= back {
                tokens[t - back] as usize
            } else {
                self.alphabet_size
            };
            ctx = ctx * base + digit;
        }
        ctx
    }

    /// Next-symbol probabilities at `context` for sampling temperature `temperature`.
    pub fn probs(&self, context: usize, temperature: f64) -> Vec<f64> {
        softmax_scaled(self.row(context), 1.0 / temperature)
    }

    pub fn validate_tokens(&self, tokens: &[u8]) -> Result<()> {
        if tokens.len() != self.length {
            return Err(Error::LengthMismatch {
                expected: self.length,
                actual: tokens.len(),
            });
        }
        if let Some(&bad) = tokens.iter().find(|&&s| s as usize >= self.alphabet_size) {
            return Err(Error::InvalidParameter(format!(
                "token {bad} outside alphabet of size {}",
                self.alphabet_size
            )));
        }
        Ok(())
    }

    /// Draws one sequence left to right from `softmax(logits / temperature)`.
    pub fn sample_sequence<R: Rng + ?Sized>(&self, temperature: f64, rng: &mut R) -> Vec<u8> {
        assert!(temperature > 0.0, "temperature must be positive");
        let mut tokens = Vec::with_capacity(self.length);
        let mut probs = vec![0.0; self.alphabet_size];
        for t in 0..self.length {
            let ctx = self.context_at(&tokens, t);
            softmax_scaled_into(self.row(ctx), 1.0 / temperature, &mut probs);
            let u: f64 = rng.gen();
            tokens.push(inverse_cdf(&probs, u) as u8);
        }
        tokens
    }

    /// `log π(tokens)` at temperature 1.
    pub fn sequence_log_prob(&self, tokens: &[u8]) -> f64 {
        (0..tokens.len())
            .map(|t| {
                let row = self.row(self.context_at(tokens, t));
                row[tokens[t] as usize] - log_sum_exp(row)
            })
            .sum()
    }

    /// Gradient of [`sequence_log_prob`](Self::sequence_log_prob) with respect to the logits.
    pub fn log_prob_grad(&self, tokens: &[u8]) -> GradTable {
        let mut entries = BTreeMap::new();
        for t in 0..tokens.len() {
            let ctx = self.context_at(tokens, t);
            let p = self.probs(ctx, 1.0);
            for (s, ps) in p.iter().enumerate() {
                let indicator = if s == tokens[t] as usize { 1.0 } else { 0.0 };
                *entries.entry((ctx, s)).or_insert(0.0) += indicator - ps;
            }
        }
        GradTable { entries }
    }

    /// Adds `scale * ∇ log π(tokens)` into a dense gradient laid out like the logits.
    pub fn accumulate_log_prob_grad(&self, tokens: &[u8], scale: f64, out: &mut [f64]) {
        let a = self.alphabet_size;
        let mut probs = vec![0.0; a];
        for t in 0..tokens.len() {
            let ctx = self.context_at(tokens, t);
            softmax_scaled_into(self.row(ctx), 1.0, &mut probs);
            let dst = &mut out[ctx * a..(ctx + 1) * a];
            for (g, p) in dst.iter_mut().zip(&probs) {
                *g -= scale * p;
            }
            dst[tokens[t] as usize] += scale;
        }
    }

    /// Sum over the contexts visited by `tokens` of `KL(self[ctx] ‖ reference[ctx])`.
    pub fn token_kl(&self, reference: &PolicyParams, tokens: &[u8]) -> f64 {
        (0..tokens.len())
            .map(|t| {
                let ctx = self.context_at(tokens, t);
                categorical_kl(self.row(ctx), reference.row(ctx))
            })
            .sum()
    }

    /// Adds `scale * ∇_self token_kl(self, reference, tokens)` into `out`.
    ///
    /// For `p = softmax(θ)`, `∂ KL(p ‖ q) / ∂θ_s = p_s (log p_s − log q_s − KL)`.
    pub fn accumulate_kl_grad(&self, reference: &PolicyParams, tokens: &[u8], scale: f64, out: &mut [f64]) {
        let a = self.alphabet_size;
        for t in 0..tokens.len() {
            let ctx = self.context_at(tokens, t);
            let lp = log_softmax(self.row(ctx));
            let lq = log_softmax(reference.row(ctx));
            let kl: f64 = lp.iter().zip(&lq).map(|(p, q)| p.exp() * (p - q)).sum();
            let dst = &mut out[ctx * a..(ctx + 1) * a];
            for s in 0..a {
                dst[s] += scale * lp[s].exp() * (lp[s] - lq[s] - kl);
            }
        }
    }

    /// Elementwise `self ← weight·other + (1 − weight)·self`.
    pub fn mix_toward(&mut self, other: &PolicyParams, weight: f64) {
        for (r, &x) in self.logits.iter_mut().zip(&other.logits) {
            *r = weight * x + (1.0 - weight) * *r;
        }
    }

    /// Serialises the policy as a tagged text checkpoint. Floats are written in
    /// shortest round-trip form, so [`from_checkpoint`](Self::from_checkpoint) restores them bit for bit.
    pub fn to_checkpoint(&self, label: &str) -> String {
        let mut out = String::new();
        writeln!(out, "{CHECKPOINT_TAG}").unwrap();
        writeln!(out, "label {}", label.replace(char::is_whitespace, "_")).unwrap();
        writeln!(out, "alphabet {}", self.alphabet_size).unwrap();
        writeln!(out, "order {}", self.order).unwrap();
        writeln!(out, "length {}", self.length).unwrap();
        writeln!(out, "contexts {}", self.num_contexts()).unwrap();
        for ctx in 0..self.num_contexts() {
            let row: Vec<String> = self.row(ctx).iter().map(|x| format!("{x:?}")).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        out
    }

    /// Parses a checkpoint written by [`to_checkpoint`](Self::to_checkpoint); returns the policy and its label.
    pub fn from_checkpoint(text: &str) -> Result<(Self, String)> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
        let err = |line: usize, msg: &str| Error::Checkpoint {
            line,
            msg: msg.to_string(),
        };
        let (n, tag) = lines.next().ok_or_else(|| err(1, "empty checkpoint"))?;
        if tag.trim() != CHECKPOINT_TAG {
            return Err(err(n, "missing format tag"));
        }
        let mut field = |name: &str| -> Result<(usize, String)> {
            let (n, line) = lines.next().ok_or_else(|| err(0, "truncated header"))?;
            let rest = line
                .strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| err(n, &format!("expected `{name}`")))?;
            Ok((n, rest.trim().to_string()))
        };
        let (_, label) = field("label")?;
        let mut number = |name: &str| -> Result<usize> {
            let (n, v) = field(name)?;
            v.parse().map_err(|_| err(n, &format!("bad {name}")))
        };
        let alphabet = number("alphabet")?;
        let order = number("order")?;
        let length = number("length")?;
        let contexts = number("contexts")?;
        let mut logits = Vec::with_capacity(contexts * alphabet);
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let before = logits.len();
            for tok in line.split_whitespace() {
                logits.push(tok.parse::<f64>().map_err(|_| err(n, "bad logit"))?);
            }
            if logits.len() - before != alphabet {
                return Err(err(n, "row width differs from alphabet size"));
            }
        }
        if logits.len() != contexts * alphabet {
            return Err(err(0, "row count differs from context count"));
        }
        let policy = Self::from_logits(alphabet, order, length, logits).map_err(|e| err(0, &e.to_string()))?;
        Ok((policy, label))
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(xs);
    xs.iter().map(|x| x - lse).collect()
}

/// `softmax(scale · xs)`.
pub fn softmax_scaled(xs: &[f64], scale: f64) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    softmax_scaled_into(xs, scale, &mut out);
    out
}

fn softmax_scaled_into(xs: &[f64], scale: f64, out: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = ((x - max) * scale).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (s, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return s;
        }
    }
    // u landed in the rounding gap above the accumulated mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Exact `KL(softmax(p) ‖ softmax(q))`.
pub fn categorical_kl(p_logits: &[f64], q_logits: &[f64]) -> f64 {
    let lp = log_softmax(p_logits);
    let lq = log_softmax(q_logits);
    let kl: f64 = lp.iter().zip(&lq).map(|(p, q)| p.exp() * (p - q)).sum();
    kl.max(0.0)
}

/// Shannon entropy of `softmax(logits / temperature)`.
pub fn entropy_at_temperature(logits: &[f64], temperature: f64) -> f64 {
    let scaled: Vec<f64> = logits.iter().map(|x| x / temperature).collect();
    let lp = log_softmax(&scaled);
    -lp.iter().map(|l| if l.is_finite() { l.exp() * l } else { 0.0 }).sum::<f64>()
}
