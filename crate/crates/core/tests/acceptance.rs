//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use proauth::ap2t::{compute_security_bound, parity_encode, FrameLayout};
use proauth::channel::{AdversaryKind, AdversaryModel, ListeningPattern};
use proauth::harness::{load_configs, run_experiment, write_results, ExperimentConfig, OutputFormat, ParamsConfig};
use proauth::refresh::{audit_deterministic_schedule, coverage_probability, dense_schedule};
use proauth::session::PairSpec;
use proauth::{BitString, ProtocolId, ProtocolParams, Tag, Verdict, Verifier};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn sigma(p: f64, trials: f64) -> f64 {
    (p * (1.0 - p) / trials).sqrt()
}

fn timed(limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = body();
    let took = start.elapsed();
    out.detail = format!("{}; {:.2?}", out.detail, took);
    if let Some(limit) = limit {
        if took > limit {
            out.pass = false;
            out.detail = format!("{} exceeds {:?}", out.detail, limit);
        }
    }
    out
}

fn cfg(protocol: ProtocolId, n: usize, l: usize, kw: usize, trials: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(protocol, ParamsConfig::new(n, l, kw), trials, seed)
}

fn ap1_completeness() -> Outcome {
    let mut worst = String::new();
    let mut pass = true;
    for (n, l) in [(4, 8), (16, 16), (64, 32)] {
        let params = ProtocolParams::with_default_keyword(n, l, 16).unwrap();
        let (mut tag, mut verifier) = PairSpec::new(ProtocolId::Ap1, params).build(n as u64, l as u64).unwrap();
        let mut opens = 0;
        let mut synced = 0;
        for _ in 0..10_000 {
            let msg = tag.begin_session().unwrap();
            let verdict = verifier.handle(&msg);
            tag.complete_session(verdict).unwrap();
            opens += (verdict == Verdict::Open) as u32;
            synced += (Tag::shared_state(&tag) == Verifier::shared_state(&verifier)) as u32;
        }
        pass &= opens == 10_000 && synced == 10_000;
        worst += &format!("({n},{l}): {opens} open, {synced} in sync; ");
    }
    outcome(pass, worst.trim_end_matches("; "))
}

fn ap1_guessing() -> Outcome {
    let mut c = cfg(ProtocolId::Ap1, 4, 8, 16, 1_000_000, 2);
    c.adversary = AdversaryModel::of_kind(AdversaryKind::Impersonate, ListeningPattern::Never);
    let r = run_experiment(&c).unwrap();
    let p = 2f64.powi(-8);
    let tol = 3.0 * sigma(p, r.stats.adversary_attempts as f64);
    let pass = r.stats.adversary_attempts == 1_000_000 && (r.adversary_success_rate - p).abs() <= tol;
    outcome(pass, format!("rate {:.6} vs 2^-8 = {p:.6} ± {tol:.6}", r.adversary_success_rate))
}

/// Leak before session 0, miss session 0, then attack the remaining n - 1 sessions.
fn recovery_config(protocol: ProtocolId, n: usize, l: usize, kw: usize, trials: u64, seed: u64) -> ExperimentConfig {
    let mut c = cfg(protocol, n, l, kw, trials, seed);
    let mut heard = vec![true; n];
    heard[0] = false;
    c.adversary = AdversaryModel::of_kind(AdversaryKind::Eavesdrop, ListeningPattern::Schedule { heard })
        .leak_before(0)
        .attack_from(1);
    c.sessions_per_trial = n;
    c
}

fn ap1_recovery() -> Outcome {
    let (n, l) = (4, 8);
    let r = run_experiment(&recovery_config(ProtocolId::Ap1, n, l, 16, 200_000, 3)).unwrap();
    let mut leaked = recovery_config(ProtocolId::Ap1, n, l, 16, 1000, 3);
    leaked.adversary.listening = ListeningPattern::Always;
    let control = run_experiment(&leaked).unwrap();
    let p = 2f64.powi(-(l as i32));
    let attempts = r.stats.adversary_attempts as f64;
    let tol = 3.0 * sigma(p, attempts);
    let pass = attempts == 200_000.0 * (n - 1) as f64
        && (r.adversary_success_rate - p).abs() <= tol
        && control.adversary_success_rate == 1.0;
    outcome(
        pass,
        format!(
            "rate {:.6} vs 2^-8 = {p:.6} ± {tol:.6} over {attempts} attempts; without the private session {:.3}",
            r.adversary_success_rate, control.adversary_success_rate
        ),
    )
}

fn coverage() -> Outcome {
    let (n, r, sessions, trials) = (64, 12, 64, 100_000);
    let est = coverage_probability(n, r, sessions, trials, 4).unwrap();
    let floor = 1.0 - 1.0 / n as f64;
    let miss_bound = (1.0 - 1.0 / n as f64).powi((r * sessions) as i32);
    let miss_tol = 3.0 * sigma(miss_bound, (trials * n as u64) as f64);
    let pass = est.estimate >= floor && est.per_entry_miss_rate <= miss_bound + miss_tol;
    outcome(
        pass,
        format!(
            "coverage {:.5} >= {floor:.5}; per-entry miss {:.2e} <= {miss_bound:.2e} + {miss_tol:.2e}",
            est.estimate, est.per_entry_miss_rate
        ),
    )
}

fn schedule_audit() -> Outcome {
    let n = 16;
    let dense = dense_schedule(n);
    let failing: Vec<usize> = (1..n).filter(|&k| !audit_deterministic_schedule(&dense, n, k).pass).collect();
    let single: Vec<Vec<usize>> = (0..n).map(|_| vec![1]).collect();
    let flagged = (1..n).all(|k| {
        let report = audit_deterministic_schedule(&single, n, k);
        !report.pass && !report.flagged_entries.is_empty()
    });
    outcome(
        failing.is_empty() && flagged,
        format!("dense schedule failing k: {failing:?}; single-entry schedule flagged for every k: {flagged}"),
    )
}

/// Entries are 32 bits wide; below keyword_len bits the seed space rather than the keyword limits security.
fn ap2_eavesdropper() -> Outcome {
    let kw = 16;
    let p = 2f64.powi(-kw);
    let mut full = cfg(ProtocolId::Ap2, 4, 32, kw as usize, 1_000_000, 6);
    full.adversary = AdversaryModel::of_kind(AdversaryKind::Eavesdrop, ListeningPattern::Always).attack_from(2);
    full.sessions_per_trial = 3;
    let a = run_experiment(&full).unwrap();
    let restored = run_experiment(&recovery_config(ProtocolId::Ap2, 4, 32, kw as usize, 333_334, 7)).unwrap();
    let limit = |attempts: u64| p + 3.0 * sigma(p, attempts as f64);
    let pass = a.adversary_success_rate <= limit(a.stats.adversary_attempts)
        && restored.adversary_success_rate <= limit(restored.stats.adversary_attempts)
        && a.pass
        && restored.pass;
    outcome(
        pass,
        format!(
            "full transcript {:.2e} ({} attempts), leak + private session {:.2e} ({} attempts), limit {:.2e}",
            a.adversary_success_rate,
            a.stats.adversary_attempts,
            restored.adversary_success_rate,
            restored.stats.adversary_attempts,
            limit(a.stats.adversary_attempts)
        ),
    )
}

fn weight(bits: &BitString) -> usize {
    bits.count_ones()
}

fn codeword(message: u64, m: usize, dims: usize) -> BitString {
    let payload = BitString::from_uint(message, m);
    payload.concat(&parity_encode(&payload, dims))
}

fn distance(a: &BitString, b: &BitString) -> usize {
    a.iter().zip(b.iter()).filter(|(x, y)| x != y).count()
}

fn code_distance() -> Outcome {
    // m = 8 by all pairs; m = 16 by minimum nonzero weight after confirming linearity.
    let words8: Vec<BitString> = (0..256).map(|x| codeword(x, 8, 1)).collect();
    let mut d8 = usize::MAX;
    for i in 0..words8.len() {
        for j in i + 1..words8.len() {
            d8 = d8.min(distance(&words8[i], &words8[j]));
        }
    }
    let words16: Vec<BitString> = (0..1u64 << 16).map(|x| codeword(x, 16, 2)).collect();
    let linear = (0..4096u64).all(|k| {
        let (a, b) = ((k * 40503) & 0xFFFF, (k * 9973 + 17) & 0xFFFF);
        let mut sum = words16[a as usize].clone();
        sum.xor_assign(&words16[b as usize]).unwrap();
        sum == words16[(a ^ b) as usize]
    });
    let d16 = words16.iter().skip(1).map(weight).min().unwrap();
    let layout = FrameLayout::new(16, 2, 0).unwrap();
    let pass = d8 == 2 && d16 == 3 && linear && compute_security_bound(&layout).d_min == 3;
    outcome(pass, format!("m=8 D=1: d_min {d8}; m=16 D=2: d_min {d16} (linear: {linear})"))
}

fn tamper_bound() -> Outcome {
    let mut c = cfg(ProtocolId::Ap2t, 2, 8, 8, 1_000_000, 8);
    c.adversary = AdversaryModel::bitflip(None);
    let r = run_experiment(&c).unwrap();
    let layout = r.layout.unwrap();
    let bound = compute_security_bound(&layout);
    let limit = 1.0 / 32.0 + 3.0 * sigma(1.0 / 32.0, r.stats.adversary_attempts as f64);
    let pass = bound.d_min == 5 && bound.p_a_bound == 1.0 / 32.0 && r.adversary_success_rate <= limit && r.pass;
    outcome(
        pass,
        format!(
            "{} flips on {} bits: success {:.2e} over {} frames, limit {limit:.4}",
            bound.d_min,
            layout.t(),
            r.adversary_success_rate,
            r.stats.adversary_attempts
        ),
    )
}

fn deadlocks() -> Outcome {
    let mut tev = cfg(ProtocolId::Ap2t, 2, 8, 8, 100, 9);
    tev.adversary = AdversaryModel::bitflip(None);
    tev.sessions_per_trial = 1000;
    let t = run_experiment(&tev).unwrap();
    let mut plain = cfg(ProtocolId::Ap1, 2, 8, 8, 10, 9);
    plain.adversary = AdversaryModel::bitflip(Some(1));
    plain.sessions_per_trial = 100;
    let p = run_experiment(&plain).unwrap();
    let pass = t.stats.tampered == 100_000 && t.deadlock_count == 0 && p.deadlock_count >= 1;
    outcome(
        pass,
        format!(
            "tamper-evident: {} attacked sessions, {} deadlocks; plain non-atomic: {} deadlocks in {} trials",
            t.stats.tampered, t.deadlock_count, p.deadlock_count, plain.trials
        ),
    )
}

const REPRO_CONFIG: &str = r#"[
  {"protocol": "ap1", "params": {"n": 8, "l": 8}, "trials": 3000, "master_seed": 10,
   "adversary": {"kind": "impersonate", "listening": {"rule": "k-private", "window": 8, "k_private": 2, "placement": "random"}},
   "sessions_per_trial": 16},
  {"protocol": "ap2", "params": {"n": 4, "l": 8, "keyword_len": 8}, "trials": 3000, "master_seed": 10,
   "adversary": {"kind": "eavesdrop"}, "sessions_per_trial": 4},
  {"protocol": "ap2t", "params": {"n": 2, "l": 8, "keyword_len": 8}, "trials": 3000, "master_seed": 10,
   "adversary": {"kind": "bitflip-iima"}, "sessions_per_trial": 4}
]"#;

fn csv_for(configs: &[ExperimentConfig]) -> Vec<u8> {
    let results: Vec<_> = configs.iter().map(|c| run_experiment(c).unwrap()).collect();
    let mut out = Vec::new();
    write_results(&results, OutputFormat::Csv, &mut out).unwrap();
    out
}

fn reproducibility() -> Outcome {
    let first = csv_for(&load_configs(REPRO_CONFIG).unwrap());
    let second = csv_for(&load_configs(REPRO_CONFIG).unwrap());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| csv_for(&load_configs(REPRO_CONFIG).unwrap()));
    let mut reseeded = load_configs(REPRO_CONFIG).unwrap();
    reseeded.iter_mut().for_each(|c| c.master_seed = 11);
    let other = csv_for(&reseeded);
    let pass = first == second && first == single && first != other;
    outcome(pass, format!("{} CSV bytes; identical on rerun and on one thread; differs for another seed", first.len()))
}

/// Name, time limit in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AP1 completeness and synchrony", Some(10), ap1_completeness),
        ("AP1 blind-guess forgery rate", None, ap1_guessing),
        ("AP1 recovery after leak", None, ap1_recovery),
        ("sparse refresh coverage", Some(30), coverage),
        ("deterministic schedule audit", None, schedule_audit),
        ("AP2 eavesdropper resistance", None, ap2_eavesdropper),
        ("parity code distance", Some(5), code_distance),
        ("tamper-evident frame bit-flip bound", Some(60), tamper_bound),
        ("deadlock freedom under in-flight edits", None, deadlocks),
        ("reproducible CSV", None, reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let out = timed(limit.map(Duration::from_secs), check);
        failures += !out.pass as usize;
        println!("{} criterion {:>2} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, i + 1, out.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
