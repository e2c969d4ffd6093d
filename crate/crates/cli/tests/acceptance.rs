//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use sgrpo_cli::report::frontier_report;
use sgrpo_cli::sweep::{load_checkpoint, run_sweep, SweepRow};
use sgrpo_cli::train::{checkpoint_path, run_train, LOG_FILE};
use sgrpo_cli::ExperimentConfig;
use sgrpo_core::advantage::advantages_from_matrices;
use sgrpo_core::diversity::PairwiseMatrix;
use sgrpo_core::frontier::{dip, hypervolume, r2, weight_grid};
use sgrpo_core::memory::{memory_gate, GateOutcome, MemoryConfig, MemoryState};
use sgrpo_core::optimizer::clipped_objective;
use sgrpo_core::rng::{substream, Stream};
use sgrpo_core::rollout::{letters_to_tokens, sample_supergroup, score_utilities};
use sgrpo_core::theory::{concentration_check, exhaustive_partition_check, random_matrix};
use sgrpo_core::{
    grpo_advantages, supergroup_advantages, Candidate, Condition, CreditMode, DecodeParams, DissimilarityMetric,
    OperatingPoint64, PolicyParams, SgrpoHyperparams, Supergroup, ToyTask, TrainMode,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(elapsed: Duration, budget_s: f64, detail: String) -> Outcome {
    let secs = elapsed.as_secs_f64();
    check(secs < budget_s, format!("{detail}; {secs:.2}s of {budget_s:.0}s budget"))
}

fn rng(domain: u64, a: u64) -> Stream {
    substream(0xACCE, domain, a, 0)
}

// ---------------------------------------------------------------------------
// 1. advantage pipeline against a straight-line oracle

struct Oracle {
    group_diversities: Vec<f64>,
    group_signals: Vec<f64>,
    contributions: Vec<Vec<f64>>,
    standardized: Vec<Vec<f64>>,
    weights_plus: Vec<Vec<f64>>,
    weights_minus: Vec<Vec<f64>>,
    redistributed: Vec<Vec<f64>>,
    composed: Vec<Vec<f64>>,
    advantages: Vec<Vec<f64>>,
}

fn pair_mean(d: &[Vec<f64>], members: &[usize]) -> f64 {
    let n = members.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            total += d[members[a]][members[b]];
        }
    }
    total / (n * (n - 1) / 2) as f64
}

fn oracle(utilities: &[Vec<f64>], d: &[Vec<Vec<f64>>], lambda: f64, tau: f64, zeta: f64, uniform: bool) -> Oracle {
    let m = utilities.len();
    let k = utilities[0].len();
    let everyone: Vec<usize> = (0..k).collect();
    let r: Vec<f64> = d.iter().map(|dm| pair_mean(dm, &everyone)).collect();
    let r_bar = r.iter().sum::<f64>() / m as f64;
    let a: Vec<f64> = r.iter().map(|x| m as f64 / (m as f64 - 1.0) * (x - r_bar)).collect();
    let mut o = Oracle {
        group_diversities: r.clone(),
        group_signals: a.clone(),
        contributions: vec![],
        standardized: vec![],
        weights_plus: vec![],
        weights_minus: vec![],
        redistributed: vec![],
        composed: vec![],
        advantages: vec![],
    };
    for g in 0..m {
        let c: Vec<f64> = (0..k)
            .map(|i| {
                let rest: Vec<usize> = (0..k).filter(|&j| j != i).collect();
                r[g] - pair_mean(&d[g], &rest)
            })
            .collect();
        let c_bar = c.iter().sum::<f64>() / k as f64;
        let sd = (c.iter().map(|x| (x - c_bar) * (x - c_bar)).sum::<f64>() / k as f64).sqrt();
        let z: Vec<f64> = c.iter().map(|x| (x - c_bar) / (sd + zeta)).collect();
        let ep: Vec<f64> = z.iter().map(|x| (x / tau).exp()).collect();
        let em: Vec<f64> = z.iter().map(|x| (-x / tau).exp()).collect();
        let (sp, sm) = (ep.iter().sum::<f64>(), em.iter().sum::<f64>());
        let wp: Vec<f64> = ep.iter().map(|e| k as f64 * e / sp).collect();
        let wm: Vec<f64> = em.iter().map(|e| k as f64 * e / sm).collect();
        let rt: Vec<f64> = (0..k)
            .map(|i| {
                if uniform {
                    r[g]
                } else {
                    r[g] + a[g].max(0.0) * (wp[i] - 1.0) - (-a[g]).max(0.0) * (wm[i] - 1.0)
                }
            })
            .collect();
        let composed: Vec<f64> = (0..k).map(|i| (1.0 - lambda) * utilities[g][i] + lambda * rt[i]).collect();
        o.contributions.push(c);
        o.standardized.push(z);
        o.weights_plus.push(wp);
        o.weights_minus.push(wm);
        o.redistributed.push(rt);
        o.composed.push(composed);
    }
    let n = (m * k) as f64;
    let mean = o.composed.iter().flatten().sum::<f64>() / n;
    o.advantages = o
        .composed
        .iter()
        .map(|row| row.iter().map(|x| n / (n - 1.0) * (x - mean)).collect())
        .collect();
    o
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn max_diff1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let shapes_m = [2, 4, 8];
    let shapes_k = [2, 4, 16];
    let (mut worst, mut worst_inv) = (0.0f64, 0.0f64);
    for t in 0..1000u64 {
        let mut g = rng(1, t);
        let m = shapes_m[(t % 3) as usize];
        let k = shapes_k[((t / 3) % 3) as usize];
        let uniform = t % 5 == 4;
        let lambda: f64 = g.gen();
        let tau: f64 = g.gen_range(0.2..2.0);
        let zeta = 1e-8;
        let utilities: Vec<Vec<f64>> = (0..m).map(|_| (0..k).map(|_| g.gen()).collect()).collect();
        let dense: Vec<Vec<Vec<f64>>> = (0..m)
            .map(|_| {
                let mut d = vec![vec![0.0; k]; k];
                for i in 0..k {
                    for j in i + 1..k {
                        let x: f64 = g.gen();
                        d[i][j] = x;
                        d[j][i] = x;
                    }
                }
                d
            })
            .collect();
        let matrices: Vec<PairwiseMatrix<f64>> = dense
            .iter()
            .map(|d| PairwiseMatrix::from_entries(k, d.iter().flatten().copied().collect()).unwrap())
            .collect();
        let hyper = SgrpoHyperparams {
            lambda,
            tau_c: tau,
            zeta,
            credit_mode: if uniform { CreditMode::Uniform } else { CreditMode::Loo },
        };
        let b = advantages_from_matrices(&utilities, &matrices, &hyper).map_err(|e| e.to_string())?;
        let o = oracle(&utilities, &dense, lambda, tau, zeta, uniform);
        let diffs = [
            max_diff1(&b.group_diversities, &o.group_diversities),
            max_diff1(&b.group_signals, &o.group_signals),
            max_diff(&b.contributions, &o.contributions),
            max_diff(&b.standardized, &o.standardized),
            max_diff(&b.weights_plus, &o.weights_plus),
            max_diff(&b.weights_minus, &o.weights_minus),
            max_diff(&b.redistributed, &o.redistributed),
            max_diff(&b.composed, &o.composed),
            max_diff(&b.advantages, &o.advantages),
        ];
        worst = diffs.iter().copied().fold(worst, f64::max);
        // invariants, computed here rather than through the bundle's helper
        for gi in 0..m {
            let mean_rt = o.redistributed[gi].iter().sum::<f64>() / k as f64;
            worst_inv = worst_inv.max((b.redistributed[gi].iter().sum::<f64>() / k as f64 - o.group_diversities[gi]).abs());
            worst_inv = worst_inv.max((mean_rt - o.group_diversities[gi]).abs());
            worst_inv = worst_inv.max((b.weights_plus[gi].iter().sum::<f64>() - k as f64).abs());
            worst_inv = worst_inv.max((b.weights_minus[gi].iter().sum::<f64>() - k as f64).abs());
        }
        worst_inv = worst_inv.max(b.advantages.iter().flatten().sum::<f64>().abs());
    }
    let ok = worst < 1e-9 && worst_inv < 1e-9;
    within_budget(
        start.elapsed(),
        10.0,
        format!("1000 supergroups, max field error {worst:.2e}, max invariant residual {worst_inv:.2e}"),
    )
    .and_then(|d| check(ok, d))
}

// ---------------------------------------------------------------------------
// 2. exhaustive partition identity

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (n, m, k) in [(4, 2, 2), (6, 2, 3), (6, 3, 2), (8, 2, 4)] {
        for s in 0..100u64 {
            let d = random_matrix(n, 1000 * n as u64 + s);
            let r = exhaustive_partition_check(&d, m, k).map_err(|e| e.to_string())?;
            worst = worst.max(r.abs_error);
            checked += 1;
        }
    }
    within_budget(start.elapsed(), 30.0, format!("{checked} matrices, max |mean − D_N| {worst:.2e}"))
        .and_then(|d| check(worst < 1e-12, d))
}

// ---------------------------------------------------------------------------
// 3. concentration bound on toy-policy samples

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let task = ToyTask::default_task();
    let policy = task.initial_policy().map_err(|e| e.to_string())?;
    let r = concentration_check(&policy, &task.metric, 8, 8, 0.5, 10_000, 3).map_err(|e| e.to_string())?;
    let bound = 4.0 * (-0.5f64 * 8.0 * 4.0 * 0.25).exp();
    let ok = r.empirical_freq <= 0.0733 && (r.bound - bound).abs() < 1e-15 && r.satisfied;
    within_budget(
        start.elapsed(),
        60.0,
        format!(
            "10000 trials, frequency {} vs bound {:.4} (max deviation {:.4})",
            r.empirical_freq, r.bound, r.max_deviation
        ),
    )
    .and_then(|d| check(ok, d))
}

// ---------------------------------------------------------------------------
// 4. analytic gradients against central differences

fn random_policy(g: &mut Stream, a: usize, order: usize, len: usize, scale: f64) -> PolicyParams {
    let mut p = PolicyParams::uniform(a, order, len).unwrap();
    for x in p.logits_mut() {
        *x = g.gen_range(-scale..scale);
    }
    p
}

fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    let denom = norm(analytic).max(norm(numeric));
    if denom == 0.0 {
        0.0
    } else {
        norm(&diff) / denom
    }
}

fn central_difference(params: &PolicyParams, h: f64, f: impl Fn(&PolicyParams) -> f64) -> Vec<f64> {
    let mut p = params.clone();
    (0..p.logits().len())
        .map(|i| {
            let x = p.logits()[i];
            p.logits_mut()[i] = x + h;
            let up = f(&p);
            p.logits_mut()[i] = x - h;
            let down = f(&p);
            p.logits_mut()[i] = x;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let h = 1e-5;
    let (mut worst_lp, mut worst_obj) = (0.0f64, 0.0f64);
    let mut clipped = 0.0;
    for t in 0..50u64 {
        let mut g = rng(4, t);
        let a = g.gen_range(2..=6);
        let order = g.gen_range(1..=2);
        let len = g.gen_range(3..=8);
        let policy = random_policy(&mut g, a, order, len, 1.5);

        let tokens = policy.sample_sequence(1.0, &mut g);
        let mut analytic = vec![0.0; policy.logits().len()];
        policy.accumulate_log_prob_grad(&tokens, 1.0, &mut analytic);
        let numeric = central_difference(&policy, h, |p| p.sequence_log_prob(&tokens));
        worst_lp = worst_lp.max(rel_error(&analytic, &numeric));

        let mut old = policy.clone();
        for x in old.logits_mut() {
            *x += g.gen_range(-0.3..0.3);
        }
        let reference = random_policy(&mut g, a, order, len, 1.0);
        let rollouts: Vec<Vec<u8>> = (0..8).map(|_| old.sample_sequence(1.0, &mut g)).collect();
        let advantages: Vec<f64> = (0..8).map(|_| g.gen_range(-1.5..1.5)).collect();
        let old_lp: Vec<f64> = rollouts.iter().map(|x| old.sequence_log_prob(x)).collect();
        let eval = clipped_objective(&policy, &reference, &rollouts, &advantages, &old_lp, 0.2, 0.05);
        clipped += eval.clip_fraction;
        let numeric = central_difference(&policy, h, |p| {
            clipped_objective(p, &reference, &rollouts, &advantages, &old_lp, 0.2, 0.05).loss
        });
        worst_obj = worst_obj.max(rel_error(&eval.grad, &numeric));
    }
    check(
        worst_lp < 1e-5 && worst_obj < 1e-5,
        format!(
            "50 instances, log-prob rel error {worst_lp:.2e}, objective rel error {worst_obj:.2e} (mean clip fraction {:.2})",
            clipped / 50.0
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. frontier indicators

fn criterion_5() -> Outcome {
    let samples = 1_000_000u64;
    let mut outside = 0;
    let mut worst_z = 0.0f64;
    for t in 0..100u64 {
        let mut g = rng(5, t);
        let count = g.gen_range(1..=10);
        let reference = (g.gen_range(0.0..0.3), g.gen_range(0.0..0.3));
        let points: Vec<OperatingPoint64> = (0..count).map(|_| OperatingPoint64::at(g.gen(), g.gen())).collect();
        let hv = hypervolume(&points, reference).value;
        let box_area = (1.0 - reference.0) * (1.0 - reference.1);
        let mut hits = 0u64;
        for _ in 0..samples {
            let x = g.gen_range(reference.0..1.0);
            let y = g.gen_range(reference.1..1.0);
            // inside the union of the rectangles [ref, p]
            if points.iter().any(|p| x <= p.utility && y <= p.diversity) {
                hits += 1;
            }
        }
        let f = hits as f64 / samples as f64;
        let estimate = box_area * f;
        let sigma = box_area * (f * (1.0 - f) / samples as f64).sqrt();
        let z = if sigma > 0.0 { (hv - estimate).abs() / sigma } else { 0.0 };
        worst_z = worst_z.max(z);
        if (hv - estimate).abs() > 3.0 * sigma && (hv - estimate).abs() > 1e-12 {
            outside += 1;
        }
    }
    let two = [OperatingPoint64::at(0.5, 1.0), OperatingPoint64::at(1.0, 0.5)];
    let hv_hand = hypervolume(&two, (0.0, 0.0)).value;
    let r2_hand = r2(&[OperatingPoint64::at(0.5, 0.5)], &weight_grid(101), (1.0, 1.0)).map_err(|e| e.to_string())?;
    let r2_oracle = (0..=100)
        .map(|i| {
            let w = i as f64 / 100.0;
            (w * 0.5).max((1.0 - w) * 0.5)
        })
        .sum::<f64>()
        / 101.0;
    let dip_hand = dip(&[OperatingPoint64::at(0.6, 0.8), OperatingPoint64::at(0.9, 0.2)], (1.0, 1.0))
        .map_err(|e| e.to_string())?;
    let hand_ok = hv_hand == 0.75
        && (r2_hand - 7600.0 / 20200.0).abs() < 1e-12
        && (r2_oracle - 7600.0 / 20200.0).abs() < 1e-12
        && (dip_hand - 0.2f64.sqrt()).abs() < 1e-12;
    check(
        outside == 0 && hand_ok,
        format!(
            "{outside}/100 HV sets outside 3σ (max |z| {worst_z:.2}); hand cases hv {hv_hand}, r2 {r2_hand:.12}, dip {dip_hand:.12}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. degenerate shapes recover GRPO

fn criterion_6() -> Outcome {
    let task = ToyTask::default_task();
    let policy = task.initial_policy().map_err(|e| e.to_string())?;
    let condition = Condition::unconditional();
    let (mut worst_k1, mut lambda0_equal) = (0.0f64, true);
    for seed in 0..20u64 {
        let decode = DecodeParams::new(1.0, seed).unwrap();
        let lambda = 0.05 * (seed + 1) as f64;
        // K = 1: every rollout forms its own group
        let sg: Supergroup<f64> = sample_supergroup(&policy, &condition, 16, 1, decode);
        let sg = score_utilities(sg, &task.utility).map_err(|e| e.to_string())?;
        let hyper = SgrpoHyperparams {
            lambda,
            ..Default::default()
        };
        let b = supergroup_advantages(&sg, &task.metric, &hyper).map_err(|e| e.to_string())?;
        let flat = sg.flattened().utilities().map_err(|e| e.to_string())?;
        let grpo = grpo_advantages(&flat).map_err(|e| e.to_string())?;
        for (a, g) in b.advantages.iter().flatten().zip(grpo.iter().flatten()) {
            worst_k1 = worst_k1.max((a - (1.0 - lambda) * g).abs());
        }
        // λ = 0 on a full 8×8 supergroup
        let sg: Supergroup<f64> = sample_supergroup(&policy, &condition, 8, 8, decode);
        let sg = score_utilities(sg, &task.utility).map_err(|e| e.to_string())?;
        let hyper = SgrpoHyperparams {
            lambda: 0.0,
            ..Default::default()
        };
        let b = supergroup_advantages(&sg, &task.metric, &hyper).map_err(|e| e.to_string())?;
        let grpo = grpo_advantages(&sg.flattened().utilities().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let flat_sgrpo: Vec<f64> = b.advantages.iter().flatten().copied().collect();
        let flat_grpo: Vec<f64> = grpo.iter().flatten().copied().collect();
        lambda0_equal &= flat_sgrpo == flat_grpo;
    }
    check(
        worst_k1 < 1e-9 && lambda0_equal,
        format!("20 seeds, K=1 max |A − (1−λ)A_grpo| {worst_k1:.2e}, λ=0 bitwise equal: {lambda0_equal}"),
    )
}

// ---------------------------------------------------------------------------
// 7 and 8. frontier ordering after training

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct SeedResult {
    seed: u64,
    grpo: f64,
    sgrpo: f64,
    uniform: f64,
    elapsed: Duration,
}

fn train_and_sweep(dir: &Path, seed: u64) -> Result<SeedResult, String> {
    let start = Instant::now();
    let variants = [
        ("grpo", TrainMode::Grpo, CreditMode::Loo),
        ("sgrpo", TrainMode::Sgrpo, CreditMode::Loo),
        ("sgrpo_uniform", TrainMode::Sgrpo, CreditMode::Uniform),
    ];
    let mut rows: Vec<SweepRow> = Vec::new();
    for (name, mode, credit) in variants {
        let mut cfg = ExperimentConfig::default();
        cfg.train.mode = mode;
        cfg.train.steps = 300;
        cfg.train.groups = 8;
        cfg.train.group_size = 8;
        cfg.train.seed = seed;
        cfg.train.hyper.lambda = 0.5;
        cfg.train.hyper.credit_mode = credit;
        cfg.output.model = Some(name.to_string());
        cfg.output.checkpoint_every = 0;
        cfg.sweep.temperatures = (2..=12).map(|i| i as f64 / 10.0).collect();
        cfg.sweep.seeds = vec![seed];
        let out = dir.join(format!("{name}_seed{seed}"));
        run_train(&cfg, &out).map_err(|e| e.to_string())?;
        let model = load_checkpoint(&checkpoint_path(&out, 300)).map_err(|e| e.to_string())?;
        rows.extend(run_sweep(&[model], &cfg).map_err(|e| e.to_string())?);
    }
    let report = frontier_report(&rows, None).map_err(|e| e.to_string())?;
    let hv = |name: &str| report.models[name].hv;
    Ok(SeedResult {
        seed,
        grpo: hv("grpo"),
        sgrpo: hv("sgrpo"),
        uniform: hv("sgrpo_uniform"),
        elapsed: start.elapsed(),
    })
}

fn criteria_7_8() -> (Outcome, Outcome) {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let results: Result<Vec<SeedResult>, String> = SEEDS.iter().map(|&s| train_and_sweep(dir.path(), s)).collect();
    let results = match results {
        Ok(r) => r,
        Err(e) => return (Err(e.clone()), Err(e)),
    };
    let table: Vec<String> = results
        .iter()
        .map(|r| format!("seed {}: grpo {:.4} uniform {:.4} sgrpo {:.4}", r.seed, r.grpo, r.uniform, r.sgrpo))
        .collect();
    for line in &table {
        println!("    {line}");
    }
    let slowest = results.iter().map(|r| r.elapsed.as_secs_f64()).fold(0.0, f64::max);
    let wins = results.iter().filter(|r| r.sgrpo > r.grpo).count();
    let between = results.iter().filter(|r| r.grpo < r.uniform && r.uniform < r.sgrpo).count();
    let c7 = check(
        wins >= 4 && slowest < 600.0,
        format!("SGRPO HV above GRPO in {wins}/5 seeds (need 4); slowest seed {slowest:.1}s"),
    );
    let c8 = check(
        between >= 3,
        format!("uniform-credit HV strictly between GRPO and SGRPO in {between}/5 seeds (need 3)"),
    );
    (c7, c8)
}

// ---------------------------------------------------------------------------
// 9. memory gate

fn criterion_9() -> Outcome {
    let cfg = MemoryConfig::default();
    if (cfg.eta, cfg.gamma, cfg.capacity) != (0.9, 0.4, 25) {
        return Err(format!("unexpected defaults {cfg:?}"));
    }
    let metric = DissimilarityMetric::Levenshtein;
    let cand = |s: &str| Candidate::new(letters_to_tokens(s).unwrap());
    let mut mem = MemoryState::default();

    let bypass = memory_gate(&cand("ABCDABCD"), 0.9, &mut mem, &cfg, &metric) == (0.9, GateOutcome::BelowThreshold)
        && memory_gate(&cand("ABCDABCD"), 0.3, &mut mem, &cfg, &metric) == (0.3, GateOutcome::BelowThreshold)
        && mem.is_empty();

    let created = memory_gate(&cand("ABCDABCD"), 0.95, &mut mem, &cfg, &metric) == (0.95, GateOutcome::NewIndex)
        && mem.len() == 1
        && memory_gate(&cand("EFGHEFGH"), 0.97, &mut mem, &cfg, &metric) == (0.97, GateOutcome::NewIndex)
        && mem.len() == 2;

    let mut stored = true;
    for _ in 1..25 {
        stored &= memory_gate(&cand("ABCDABCA"), 0.95, &mut mem, &cfg, &metric) == (0.95, GateOutcome::Stored { index: 0 });
    }
    let suppressed = stored
        && mem.entries[0].count == 25
        && memory_gate(&cand("ABCDABCA"), 0.99, &mut mem, &cfg, &metric) == (0.0, GateOutcome::Suppressed { index: 0 })
        && mem.entries[0].count == 25
        && mem.len() == 2;

    check(
        bypass && created && suppressed,
        format!("sub-threshold bypass {bypass}, new index {created}, full bucket suppressed {suppressed}"),
    )
}

// ---------------------------------------------------------------------------
// 10. byte-identical reruns of the train command

fn read_tree(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    let ckpts = dir.join("checkpoints");
    let mut names: Vec<_> = std::fs::read_dir(&ckpts)
        .map_err(|e| format!("{}: {e}", ckpts.display()))?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        files.push((name.clone(), std::fs::read(ckpts.join(&name)).unwrap()));
    }
    files.push((LOG_FILE.into(), std::fs::read(dir.join(LOG_FILE)).map_err(|e| e.to_string())?));
    Ok(files)
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("c.toml");
    std::fs::write(
        &config,
        "[train]\nmode = \"memory_grpo\"\nsteps = 40\nseed = 9\n\n[output]\ncheckpoint_every = 10\n",
    )
    .map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_sgrpo"))
            .args(["train", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("train exited with {}", status.status));
        }
        trees.push(read_tree(&out)?);
    }
    let identical = trees[0] == trees[1];
    let bytes: usize = trees[0].iter().map(|(_, b)| b.len()).sum();
    check(
        identical && trees[0].len() == 6,
        format!("{} files ({bytes} bytes) identical across runs: {identical}", trees[0].len()),
    )
}

// ---------------------------------------------------------------------------

fn report(id: usize, title: &str, outcome: &Outcome) -> bool {
    let (tag, detail, ok) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("criterion {id:>2} {tag}  {title}: {detail}");
    ok
}

fn main() {
    // `cargo test` passes harness flags such as `--list`; this suite has a single entry
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut all = true;
    all &= report(1, "advantage equations vs oracle", &criterion_1());
    all &= report(2, "exhaustive partition identity", &criterion_2());
    all &= report(3, "concentration bound", &criterion_3());
    all &= report(4, "gradient correctness", &criterion_4());
    all &= report(5, "frontier indicator oracles", &criterion_5());
    all &= report(6, "degenerate equivalences", &criterion_6());
    let (c7, c8) = criteria_7_8();
    all &= report(7, "directional frontier reproduction", &c7);
    all &= report(8, "credit ablation ordering", &c8);
    all &= report(9, "memory gate behaviors", &criterion_9());
    all &= report(10, "train determinism", &criterion_10());
    if !all {
        std::process::exit(1);
    }
}
