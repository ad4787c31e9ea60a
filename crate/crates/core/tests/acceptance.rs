//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) and exits non-zero when any
//! criterion fails. Every Monte Carlo criterion uses a fixed seed.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use adasense::bounds;
use adasense::metrics::{detection_risk, sym_diff_error};
use adasense::oracles::{
    average_allocation_value, hypergeometric_pmf, kl_cap_check, maxmin_allocation_value,
    symmetrized_false_alarm, symmetrized_miss, truncated_geometric_pmf,
};
use adasense::sensing::{SensingSession, SparseSignal, SupportClass};
use adasense::strategies::{
    build_strategy, mds_subsample, non_adaptive_uniform_estimate, EstimateOutcome, MdsStrategy,
    Outcome, SdsParams, SdsStrategy, Strategy, StrategyContext, Symmetrized, DsParams,
    STRATEGY_IDS,
};
use adasense::tally::Tally;
use adasense::{SensingError, SimRng};
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

const SEED: u64 = 20_261_019;

struct Criterion {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Criterion {
    Criterion {
        pass,
        detail: detail.into(),
    }
}

fn phi_c(x: f64) -> f64 {
    1.0 - Normal::new(0.0, 1.0).unwrap().cdf(x)
}

fn c1_maxmin_allocation() -> Criterion {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        for s in 1..=3usize.min(n) {
            let mut classes = vec![SupportClass::enumerate_all_subsets(n, s).unwrap()];
            if s < n {
                classes.push(SupportClass::cyclic_intervals(n, s).unwrap());
            }
            for class in classes {
                assert!(class.is_symmetric());
                for m in [1.0, 7.3] {
                    let target = m * s as f64 / class.xi_size() as f64;
                    let (v, _) = maxmin_allocation_value(&class, m).unwrap();
                    let a = average_allocation_value(&class, m).unwrap();
                    worst = worst.max((v - target).abs()).max((a - target).abs());
                    checked += 1;
                }
            }
        }
    }
    ok(worst <= 1e-9, format!("{checked} class/budget pairs, max deviation {worst:.2e}"))
}

fn c2_kl_cap() -> Criterion {
    let (n, s, m, mu) = (64, 4, 64.0, 1.0);
    let class = SupportClass::all_subsets(n, s).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for id in STRATEGY_IDS {
        let st = build_strategy(id, &StrategyContext::new(n, s, m, mu)).unwrap();
        let r = kl_cap_check(st.as_ref(), &class, mu, m, 2000, 100, SEED + 2).unwrap();
        pass &= r.pass;
        parts.push(format!("{id} {:.4}+-{:.4}", r.min_empirical_kl, r.max_se));
    }
    ok(pass, format!("cap {:.4}; min KL: {}", mu * mu * m * s as f64 / (2.0 * n as f64), parts.join(", ")))
}

fn c3_sds_counters() -> Criterion {
    let n = 10_000;
    let m = n as f64;
    let l = 8;
    let st = SdsStrategy::new(m, SdsParams::new(l, m / (4.0 * n as f64)).unwrap()).unwrap();
    let null = SparseSignal::null(n).unwrap();
    let mut counts = vec![0u64; l + 1];
    let mut entries = 0u64;
    let mut run = 0;
    while entries < 100_000 {
        let mut rng = SimRng::for_trial(SEED + 3, 0, run);
        let out = st.run(&null, &mut rng).unwrap();
        for c in out.trace().counts_by_entry(n) {
            if c > 0 {
                counts[c] += 1;
                entries += 1;
            }
        }
        run += 1;
    }
    let dev = (1..=l)
        .map(|x| (counts[x] as f64 / entries as f64 - truncated_geometric_pmf(l, x).unwrap()).abs())
        .fold(0.0, f64::max);
    ok(dev <= 0.01, format!("{entries} entries over {run} runs, max pmf deviation {dev:.4}"))
}

/// SDS at the sufficient amplitude; returns per-trial `d` and whether the
/// budget held on every trial.
fn sds_recovery(n: usize, s: usize, trials: usize) -> (Tally, bool, f64) {
    let m = n as f64;
    let mu = bounds::estimation_upper_bound(n, s, m).unwrap().value;
    let st = SdsStrategy::new(m, SdsParams::defaults(n, m).unwrap()).unwrap();
    let class = SupportClass::all_subsets(n, s).unwrap();
    let per_trial: Vec<(f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let support = class.sample(&mut SimRng::for_trial(SEED + 4, 1, t));
            let signal = SparseSignal::new(n, support, mu).unwrap();
            let out = st.run(&signal, &mut SimRng::for_trial(SEED + 4, 0, t)).unwrap();
            let d = sym_diff_error(out.estimate().unwrap(), &signal.support_set()) as f64;
            (d, out.trace().total_precision() <= m && out.trace().ledger.spent() <= m)
        })
        .collect();
    let tally: Tally = per_trial.iter().map(|p| p.0).collect();
    (tally, per_trial.iter().all(|p| p.1), mu)
}

fn c4_sds_recovery(cache: &mut Option<(Tally, f64)>) -> Criterion {
    let (n, s) = (1 << 14, 4);
    let log2n = (n as f64).log2();
    let valid = (s + 1) as f64 <= n as f64 / (log2n * log2n - 3.0);
    let (d, budget_ok, mu) = sds_recovery(n, s, 200);
    *cache = Some((d, mu));
    ok(
        valid && budget_ok && d.mean() <= 0.5,
        format!(
            "mu = {mu:.5}, mean d = {:.4} +- {:.4} over 200 trials, budget held: {budget_ok}",
            d.mean(),
            d.std_error()
        ),
    )
}

fn c5_mds_detection() -> Criterion {
    let (n, s) = (1 << 16, 256);
    let m = n as f64;
    let mu = bounds::mds_sufficient_magnitude(n, s, m).unwrap().value;
    let st = MdsStrategy::new(s, m, DsParams::defaults(n)).unwrap();
    let class = SupportClass::all_subsets(n, s).unwrap();
    // the procedure is permutation invariant, so one support represents all
    let r = detection_risk(&st, &class, mu, 500, 1, SEED + 5).unwrap();
    ok(
        r.risk_sum <= 0.2 && r.p_null <= 0.1,
        format!(
            "mu = {mu:.5}, R = {:.3} +- {:.3}, false alarm {:.3}, miss {:.3}",
            r.risk_sum,
            r.se_risk_sum,
            r.p_null,
            r.worst_miss()
        ),
    )
}

fn c6_hypergeometric() -> Criterion {
    let (n, s, draw) = (100, 10, 20);
    let truth: BTreeSet<usize> = (0..s).map(|i| i * 7 + 3).collect();
    let draws = 100_000u64;
    let mut counts = vec![0u64; s + 1];
    for t in 0..draws {
        let mut rng = SimRng::for_trial(SEED + 6, 0, t);
        let sub = mds_subsample(n, draw, &mut rng);
        counts[sub.iter().filter(|i| truth.contains(i)).count()] += 1;
    }
    let tv = 0.5
        * (0..=s)
            .map(|k| (counts[k] as f64 / draws as f64 - hypergeometric_pmf(n, s, draw, k).unwrap()).abs())
            .sum::<f64>();
    ok(tv <= 0.02, format!("total variation {tv:.4} over {draws} draws"))
}

/// Measures every entry at precision `m/n` and fires when a weighted sum of
/// observations exceeds `cut`.
struct LinearTest {
    weights: Vec<f64>,
    cut: f64,
    m: f64,
}

impl Strategy for LinearTest {
    fn id(&self) -> String {
        "linear".into()
    }

    fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError> {
        let n = signal.n();
        let mut session = SensingSession::hard(signal, self.m, rng)?;
        let mut stat = 0.0;
        for i in 0..n {
            stat += self.weights[i] * session.observe(i, self.m / n as f64, rng)?;
        }
        Ok(Outcome::Detect(adasense::DetectOutcome {
            decision: stat > self.cut,
            trace: session.into_trace(),
        }))
    }

    fn estimates_support(&self) -> bool {
        false
    }
}

fn c7_risk_chain() -> Criterion {
    let mut rng = SimRng::from_seed(SEED + 7);
    let mut held = 0;
    for k in 0..200 {
        let n = rng.random_range(2..=6usize);
        let s = rng.random_range(1..n);
        let all = adasense::sensing::combinations(n, s);
        let mut members: Vec<Vec<usize>> = all.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        if members.is_empty() {
            members.push(all[rng.random_range(0..all.len())].clone());
        }
        let class = SupportClass::explicit(n, members).unwrap();
        let test = LinearTest {
            weights: (0..n).map(|_| rng.random_range(-1.0..2.0)).collect(),
            cut: rng.random_range(-1.0..3.0),
            m: n as f64,
        };
        let r = detection_risk(&test, &class, rng.random_range(0.2..3.0), 40, 0, SEED + 700 + k).unwrap();
        held += r.chain_holds() as usize;
    }
    ok(held == 200, format!("chain held for {held}/200 random tests"))
}

/// Thresholds entry `j` at `0.3 j`, so its errors depend on the label.
struct BiasedThreshold {
    m: f64,
}

impl BiasedThreshold {
    fn tau(j: usize) -> f64 {
        0.3 * j as f64
    }
}

impl Strategy for BiasedThreshold {
    fn id(&self) -> String {
        "biased".into()
    }

    fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError> {
        let n = signal.n();
        let mut session = SensingSession::hard(signal, self.m, rng)?;
        let mut estimate = BTreeSet::new();
        for j in 0..n {
            if session.observe(j, self.m / n as f64, rng)? >= Self::tau(j) {
                estimate.insert(j);
            }
        }
        Ok(Outcome::Estimate(EstimateOutcome {
            estimate,
            trace: session.into_trace(),
            truncated: false,
        }))
    }
}

fn c8_symmetrization() -> Criterion {
    let (n, s, mu) = (5, 2, 1.5);
    let m = n as f64;
    // at precision 1: P_{S'}(Ŝ_j ≠ 1) = Φ(τ_j − μ) for j ∈ S', P(Ŝ_j ≠ 0) = Φc(τ_j)
    let miss = symmetrized_miss(n, s, |_, j| 1.0 - phi_c(BiasedThreshold::tau(j) - mu));
    let alarm = symmetrized_false_alarm(n, s, |_, j| phi_c(BiasedThreshold::tau(j)));
    let sym = Symmetrized::new(Box::new(BiasedThreshold { m }));
    let signal = SparseSignal::new(n, [1, 3], mu).unwrap();
    let trials = 100_000u64;
    let tallies: Vec<Tally> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let out = sym.run(&signal, &mut SimRng::for_trial(SEED + 8, 0, t)).unwrap();
            let est = out.estimate().unwrap();
            (0..n)
                .map(|i| {
                    let wrong = est.contains(&i) != signal.contains(i);
                    Tally::from_iter([wrong as u8 as f64])
                })
                .collect::<Vec<_>>()
        })
        .reduce(
            || vec![Tally::new(); n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.merge(y);
                }
                a
            },
        );
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, t) in tallies.iter().enumerate() {
        let reference = if signal.contains(i) { miss } else { alarm };
        let z = (t.mean() - reference).abs() / t.std_error();
        pass &= z <= 3.0;
        parts.push(format!("{}:{:.4}", i + 1, t.mean()));
    }
    ok(
        pass,
        format!("miss ref {miss:.4}, false-alarm ref {alarm:.4}; empirical {}", parts.join(" ")),
    )
}

fn c9_gap(cache: &Option<(Tally, f64)>) -> Criterion {
    let (n, s) = (1 << 14, 4);
    let m = n as f64;
    let (sds, mu) = cache.unwrap_or_else(|| {
        let (d, _, mu) = sds_recovery(n, s, 200);
        (d, mu)
    });
    let taus: Vec<f64> = (0..20).map(|k| 2.5 + 0.2 * k as f64).collect();
    let class = SupportClass::all_subsets(n, s).unwrap();
    // one uniform pass per trial, scored at every threshold of the grid
    let sums: Vec<Tally> = (0..200u64)
        .into_par_iter()
        .map(|t| {
            let support = class.sample(&mut SimRng::for_trial(SEED + 9, 1, t));
            let signal = SparseSignal::new(n, support, mu).unwrap();
            let mut rng = SimRng::for_trial(SEED + 9, 0, t);
            let out = non_adaptive_uniform_estimate(&signal, m, f64::NEG_INFINITY, &mut rng).unwrap();
            let y: Vec<f64> = {
                let mut y = vec![0.0; n];
                for r in &out.trace.records {
                    y[r.action] = r.y;
                }
                y
            };
            let truth = signal.support_set();
            taus.iter()
                .map(|&tau| {
                    let est: BTreeSet<usize> = (0..n).filter(|&i| y[i] >= tau).collect();
                    Tally::from_iter([sym_diff_error(&est, &truth) as f64])
                })
                .collect::<Vec<_>>()
        })
        .reduce(
            || vec![Tally::new(); taus.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.merge(y);
                }
                a
            },
        );
    let (best_k, best) = sums
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.mean().total_cmp(&b.1.mean()))
        .unwrap();
    let ratio = best.mean() / sds.mean().max(f64::MIN_POSITIVE);
    let gap = ratio >= 10.0;
    ok(
        sds.mean() <= 0.5,
        format!(
            "SDS mean d {:.4}; uniform best tau {:.1} mean d {:.4}; ratio {ratio:.2} \
             (informational 10x gap {})",
            sds.mean(),
            taus[best_k],
            best.mean(),
            if gap { "observed" } else { "NOT observed" }
        ),
    )
}

fn c10_goldens() -> Criterion {
    // independent 40-digit evaluations of the closed forms
    let cases = [
        ("detection_lower", bounds::detection_lower_bound(10_000, 100, 1e4, 0.05), 0.214_596_602_628_934_72),
        ("estimation_lower", bounds::estimation_lower_bound(1 << 14, 16, 16384.0, 0.05), 3.185_635_177_572_070_8),
        ("estimation_upper", bounds::estimation_upper_bound(1 << 16, 1, 65536.0), 7.810_054_538_175_465_7),
        ("mds_sufficient", bounds::mds_sufficient_magnitude(1 << 16, 256, 65536.0), 0.331_284_832_568_076_82),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, b, golden) in cases {
        let v = b.unwrap().value;
        let agree = format!("{v:.5e}") == format!("{golden:.5e}");
        pass &= agree;
        parts.push(format!("{name} {v:.6}"));
    }
    ok(pass, parts.join(", "))
}

fn run_cli(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_adasense"))
        .args(args)
        .env("ADASENSE_THREADS", threads)
        .output()
        .expect("spawn adasense");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn c11_determinism() -> Criterion {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{"strategy": "sds", "n": 1024, "s": 4, "m": 1024, "amplitudes": [2, 4, 6, 8],
            "trials": 60, "metric": "sym_diff", "seed": 99, "support_grid": 4, "target_risk": 0.5}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let mut pass = true;
    let mut sizes = Vec::new();
    for cmd in ["simulate", "scan"] {
        let runs: Vec<Vec<u8>> = ["1", "1", "8", "8"]
            .iter()
            .map(|t| run_cli(&[cmd, "--config", cfg], t))
            .collect();
        pass &= runs.iter().all(|r| r == &runs[0]) && !runs[0].is_empty();
        sizes.push(format!("{cmd} {} bytes", runs[0].len()));
    }
    ok(pass, format!("{} identical across 2 runs x threads {{1, 8}}", sizes.join(", ")))
}

fn main() {
    let mut cache = None;
    let criteria: Vec<(&str, Option<Duration>, Box<dyn FnOnce(&mut Option<(Tally, f64)>) -> Criterion>)> = vec![
        ("max-min allocation equals m s / |Xi| on symmetric classes", Some(Duration::from_secs(30)), Box::new(|_| c1_maxmin_allocation())),
        ("null KL of every strategy below the cap", Some(Duration::from_secs(120)), Box::new(|_| c2_kl_cap())),
        ("SDS counters follow the truncated geometric law", None, Box::new(|_| c3_sds_counters())),
        ("SDS recovery at the sufficient amplitude", Some(Duration::from_secs(300)), Box::new(c4_sds_recovery)),
        ("MDS detection at the sufficient amplitude", None, Box::new(|_| c5_mds_detection())),
        ("subsample intersection is hypergeometric", None, Box::new(|_| c6_hypergeometric())),
        ("risk chain on random tests", None, Box::new(|_| c7_risk_chain())),
        ("symmetrized marginals match the double average", None, Box::new(|_| c8_symmetrization())),
        ("adaptive against non-adaptive at the SDS amplitude", None, Box::new(|c| c9_gap(c))),
        ("bound calculators match high-precision values", None, Box::new(|_| c10_goldens())),
        ("CLI output is byte-identical across runs and threads", None, Box::new(|_| c11_determinism())),
    ];
    let mut failures = 0;
    for (k, (name, limit, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut out = f(&mut cache);
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                out.pass = false;
                out.detail.push_str(&format!("; over the {}s limit", limit.as_secs()));
            }
        }
        if !out.pass {
            failures += 1;
        }
        println!(
            "[{}] criterion {:>2}: {name}: {} ({:.1}s)",
            if out.pass { "PASS" } else { "FAIL" },
            k + 1,
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", 11 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
