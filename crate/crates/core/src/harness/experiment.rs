//! Monte Carlo orchestration: independent trials in parallel, merged counters,
//! and a verdict against the protocol's theoretical bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap2t::{compute_security_bound, FrameLayout};
use crate::channel::{run_sessions, AdversaryKind, RunOptions, RunOutcome, RunStats};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::padstream::{derive_subseeds_with, GeneratorId, PadStream};
use crate::refresh::binomial_stderr;
use crate::session::PairSpec;
use crate::types::ProtocolId;

const TRIAL_CHUNK: u64 = 1024;

/// Seeds of one trial, taken from the sub-seeds of a chain value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub vector: u64,
    pub tag: u64,
    pub adversary: u64,
    /// Chain value of the following trial.
    pub next: u64,
}

impl TrialSeeds {
    pub fn from_chain(chain: u64, generator: GeneratorId) -> Self {
        let [vector, tag, adversary, next] = derive_subseeds_with(chain, generator);
        Self { vector, tag, adversary, next }
    }
}

/// Seeds of trial `index`; trial 0 starts from the master seed.
pub fn trial_seeds(master_seed: u64, index: u64, generator: GeneratorId) -> TrialSeeds {
    let mut seeds = TrialSeeds::from_chain(master_seed, generator);
    for _ in 0..index {
        seeds = TrialSeeds::from_chain(seeds.next, generator);
    }
    seeds
}

/// Runs one trial with explicit seeds.
pub fn run_trial(cfg: &ExperimentConfig, spec: &PairSpec, seeds: TrialSeeds, record: bool) -> Result<RunOutcome> {
    let (mut tag, mut verifier) = spec.build(seeds.vector, seeds.tag)?;
    let options = RunOptions { atomic: cfg.is_atomic(), record };
    let rng = PadStream::new(seeds.adversary, cfg.generator_id);
    run_sessions(&mut tag, &mut verifier, &cfg.adversary, cfg.sessions_per_trial, options, rng)
}

/// The success probability an adversary of this kind is judged against, with a label for its origin.
pub fn theoretical_bound(cfg: &ExperimentConfig, spec: &PairSpec, layout: Option<&FrameLayout>) -> (f64, &'static str) {
    let params = &spec.params;
    match (cfg.adversary.kind, cfg.protocol) {
        (AdversaryKind::None, _) => (0.0, "no-adversary"),
        (AdversaryKind::BitflipIima, ProtocolId::Ap2t) => {
            (compute_security_bound(layout.expect("tamper-evident layout")).p_a_bound, "tamper:(1-alpha)^d_min")
        }
        (AdversaryKind::BitflipIima, _) => (1.0, "tamper:unprotected"),
        (_, ProtocolId::Ap1) => (2f64.powi(-(params.l() as i32)), "blind-guess:2^-l"),
        (_, _) => {
            // The chained seed only spans 2^l values, so seed guessing caps security at 2^-l.
            let keyword = params.keywords().len() as f64 * 2f64.powi(-(params.keyword_len() as i32));
            let seed = 2f64.powi(-(params.l() as i32));
            if keyword >= seed {
                (keyword.min(1.0), "keyword-guess:|K|*2^-k")
            } else {
                (seed, "seed-guess:2^-l")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub layout: Option<FrameLayout>,
    pub stats: RunStats,
    /// Accepted share of untampered tag sessions; 1 when there were none.
    pub honest_accept_rate: f64,
    pub adversary_success_rate: f64,
    /// Binomial standard error of the success rate.
    pub adversary_stderr: f64,
    pub deadlock_count: u64,
    pub theoretical_bound: f64,
    pub bound_source: String,
    /// Success rate at most the bound plus three binomial σ at the bound.
    pub pass: bool,
}

fn rate(hits: u64, total: u64, empty: f64) -> f64 {
    if total == 0 {
        empty
    } else {
        hits as f64 / total as f64
    }
}

/// Runs every trial of `cfg`. Output depends only on the config, not on thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let spec = cfg.validate()?;
    let layout = spec.resolved_layout()?;

    let chunks = cfg.trials.div_ceil(TRIAL_CHUNK);
    let mut starts = Vec::with_capacity(chunks as usize);
    let mut chain = cfg.master_seed;
    for c in 0..chunks {
        starts.push(chain);
        let in_chunk = TRIAL_CHUNK.min(cfg.trials - c * TRIAL_CHUNK);
        for _ in 0..in_chunk {
            chain = TrialSeeds::from_chain(chain, cfg.generator_id).next;
        }
    }

    let stats = starts
        .par_iter()
        .enumerate()
        .map(|(c, &start)| {
            let in_chunk = TRIAL_CHUNK.min(cfg.trials - c as u64 * TRIAL_CHUNK);
            let mut chain = start;
            let mut sum = RunStats::default();
            for _ in 0..in_chunk {
                let seeds = TrialSeeds::from_chain(chain, cfg.generator_id);
                sum += run_trial(cfg, &spec, seeds, false)?.stats;
                chain = seeds.next;
            }
            Ok(sum)
        })
        .try_reduce(RunStats::default, |mut a, b| {
            a += b;
            Ok(a)
        })?;

    let (bound, source) = theoretical_bound(cfg, &spec, layout.as_ref());
    let success = rate(stats.adversary_successes, stats.adversary_attempts, 0.0);
    let attempts = stats.adversary_attempts as f64;
    let slack = if attempts > 0.0 { 3.0 * binomial_stderr(bound, attempts) } else { 0.0 };
    Ok(ExperimentResult {
        config: cfg.clone(),
        layout,
        stats,
        honest_accept_rate: rate(stats.honest_accepts, stats.honest_sessions, 1.0),
        adversary_success_rate: success,
        adversary_stderr: if attempts > 0.0 { binomial_stderr(success, attempts) } else { 0.0 },
        deadlock_count: stats.deadlocks,
        theoretical_bound: bound,
        bound_source: source.to_string(),
        pass: success <= bound + slack,
    })
}
