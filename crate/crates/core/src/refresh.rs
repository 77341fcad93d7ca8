//! Sparse randomized refresh, coverage estimation and deterministic schedule auditing.
//!
//! With `k_private` unobserved sessions in every window of `n`, refreshing a
//! random subset of about `2·log2 n` entries per session is enough for every
//! entry to be refreshed in a private session before its next use with
//! probability above `1 - 1/n`. Deterministic schedules instead need at least
//! `n - k_private + 1` refreshes of each entry between consecutive uses.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap1::key_entry_index;
use crate::error::{Error, Result};
use crate::padstream::{derive_subseeds, GeneratorId, PadStream};
use crate::types::{RefreshVector, SecretVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RefreshMode {
    /// Every entry refreshed every session.
    #[default]
    Dense,
    /// `per_session_count` random entries refreshed per session; indices travel with the values.
    SparseRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefreshPolicy {
    pub mode: RefreshMode,
    /// Entries refreshed per session in sparse mode. Ignored for dense.
    pub per_session_count: usize,
    /// Assumed unobserved sessions in every window of `n`.
    pub k_private: usize,
}

impl Default for RefreshPolicy {
    fn default() -> Self {
        Self::dense()
    }
}

impl RefreshPolicy {
    pub fn dense() -> Self {
        Self { mode: RefreshMode::Dense, per_session_count: 0, k_private: 1 }
    }

    pub fn sparse(per_session_count: usize, k_private: usize) -> Self {
        Self { mode: RefreshMode::SparseRandom, per_session_count, k_private }
    }

    /// Sparse policy with `r = ceil(2·log2 n)`.
    pub fn sparse_default(n: usize, k_private: usize) -> Self {
        Self::sparse(default_sparse_count(n), k_private)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(1..=n).contains(&self.k_private) {
            return Err(Error::InvalidParams(format!("k_private {} outside 1..={n}", self.k_private)));
        }
        if self.mode == RefreshMode::SparseRandom && !(1..=n).contains(&self.per_session_count) {
            return Err(Error::RefreshCount { r: self.per_session_count, n });
        }
        Ok(())
    }

    /// Entries refreshed per session under this policy.
    pub fn refreshed_per_session(&self, n: usize) -> usize {
        match self.mode {
            RefreshMode::Dense => n,
            RefreshMode::SparseRandom => self.per_session_count,
        }
    }

    /// Fraction of private communication, `n / k_private`.
    pub fn pcf(&self, n: usize) -> f64 {
        n as f64 / self.k_private as f64
    }
}

/// `ceil(2·log2 n)`, clamped to `1..=n`.
pub fn default_sparse_count(n: usize) -> usize {
    let r = (2.0 * (n as f64).log2()).ceil() as usize;
    r.clamp(1, n.max(1))
}

/// Uniform `r`-subset of `1..=n`, ascending. Partial Fisher–Yates on the stream.
pub fn choose_refresh_set(rng: &mut PadStream, n: usize, r: usize) -> Result<Vec<usize>> {
    if r == 0 || r > n {
        return Err(Error::RefreshCount { r, n });
    }
    let mut pool: Vec<usize> = (1..=n).collect();
    for i in 0..r {
        let j = i + rng.uniform_below((n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(r);
    pool.sort_unstable();
    Ok(pool)
}

/// Zeroes `keyentry`, then xors each `(index, value)` pair into the vector.
pub fn apply_sparse_refresh(
    arv: &SecretVector,
    keyentry: usize,
    pairs: &RefreshVector,
) -> Result<SecretVector> {
    let RefreshVector::Sparse(pairs) = pairs else {
        return Err(Error::InvalidParams("apply_sparse_refresh needs a sparse refresh vector".into()));
    };
    let n = arv.len();
    // Re-validate: the variant can be built without the checked constructor.
    RefreshVector::sparse(n, pairs.clone())?;
    let mut out = arv.clone();
    out.set(keyentry, 0)?;
    for &(idx, value) in pairs {
        let current = out.entry(idx);
        out.set(idx, current ^ value)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub n: usize,
    pub r: usize,
    pub sessions: usize,
    pub trials: u64,
    /// Fraction of trials in which every entry was refreshed at least once.
    pub estimate: f64,
    pub stderr: f64,
    /// `1 - 1/n`.
    pub bound: f64,
    /// Fraction of (trial, entry) pairs never refreshed.
    pub per_entry_miss_rate: f64,
    pub per_entry_miss_stderr: f64,
    /// `(1 - 1/n)^(r·sessions)`.
    pub per_entry_miss_bound: f64,
}

impl CoverageEstimate {
    /// Coverage at least `1 - 1/n`, and the per-entry miss rate within 3σ of its bound.
    pub fn pass(&self) -> bool {
        self.estimate >= self.bound
            && self.per_entry_miss_rate <= self.per_entry_miss_bound + 3.0 * self.per_entry_miss_stderr
    }

    pub fn record(&self) -> BoundRecord {
        BoundRecord {
            kind: "coverage".into(),
            n: self.n,
            r: self.r,
            k_private: 0,
            sessions: self.sessions,
            trials: self.trials,
            estimate: self.estimate,
            stderr: self.stderr,
            bound: self.bound,
            pass: self.pass(),
        }
    }
}

/// Flat JSON record for coverage estimates and schedule audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub kind: String,
    pub n: usize,
    pub r: usize,
    pub k_private: usize,
    pub sessions: usize,
    pub trials: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

const COVERAGE_CHUNK: u64 = 1024;

/// Monte Carlo estimate of Pr[every entry refreshed at least once] over `sessions`
/// sparse sessions of `r` random entries each. Deterministic in `seed`.
pub fn coverage_probability(n: usize, r: usize, sessions: usize, trials: u64, seed: u64) -> Result<CoverageEstimate> {
    if n == 0 || sessions == 0 || trials == 0 {
        return Err(Error::InvalidParams("coverage needs positive n, sessions and trials".into()));
    }
    if r == 0 || r > n {
        return Err(Error::RefreshCount { r, n });
    }
    let chunks = trials.div_ceil(COVERAGE_CHUNK);
    let mut chunk_seeds = Vec::with_capacity(chunks as usize);
    let mut chain = seed;
    for _ in 0..chunks {
        let [a, _, _, next] = derive_subseeds(chain);
        chunk_seeds.push(a);
        chain = next;
    }

    let (covered, missed_entries) = chunk_seeds
        .par_iter()
        .enumerate()
        .map(|(c, &chunk_seed)| {
            let start = c as u64 * COVERAGE_CHUNK;
            let count = COVERAGE_CHUNK.min(trials - start);
            let mut rng = PadStream::new(chunk_seed, GeneratorId::default());
            let mut hit = vec![false; n];
            let mut covered = 0u64;
            let mut missed = 0u64;
            for _ in 0..count {
                hit.iter_mut().for_each(|h| *h = false);
                for _ in 0..sessions {
                    for idx in choose_refresh_set(&mut rng, n, r).expect("validated r") {
                        hit[idx - 1] = true;
                    }
                }
                let m = hit.iter().filter(|&&h| !h).count() as u64;
                missed += m;
                covered += (m == 0) as u64;
            }
            (covered, missed)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let estimate = covered as f64 / trials as f64;
    let entry_trials = trials as f64 * n as f64;
    let miss_rate = missed_entries as f64 / entry_trials;
    Ok(CoverageEstimate {
        n,
        r,
        sessions,
        trials,
        estimate,
        stderr: binomial_stderr(estimate, trials as f64),
        bound: 1.0 - 1.0 / n as f64,
        per_entry_miss_rate: miss_rate,
        per_entry_miss_stderr: binomial_stderr(miss_rate, entry_trials),
        per_entry_miss_bound: (1.0 - 1.0 / n as f64).powf((r * sessions) as f64),
    })
}

pub(crate) fn binomial_stderr(p: f64, trials: f64) -> f64 {
    (p * (1.0 - p) / trials).sqrt()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryAudit {
    pub index: usize,
    /// Fewest refreshes observed between two consecutive uses of this entry.
    pub min_refreshes_between_uses: usize,
    pub meets_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub n: usize,
    pub k_private: usize,
    /// Length of the audited cycle: lcm(schedule length, n).
    pub period: usize,
    /// `n - k_private + 1` refreshes per entry between uses.
    pub required_refreshes_per_entry: usize,
    pub entries: Vec<EntryAudit>,
    pub min_window_total: usize,
    pub max_refreshes_per_session: usize,
    /// `n·(n - k_private + 1)` refreshes per window of `n` sessions.
    pub window_bound: usize,
    /// `n·(k_private + 1)`, the alternative count; reported, not enforced.
    pub alternative_window_bound: usize,
    pub window_ok: bool,
    /// Session positions (0-based) that named indices outside `1..=n`; those indices are ignored.
    pub invalid_index_sessions: Vec<usize>,
    pub flagged_entries: Vec<usize>,
    pub pass: bool,
}

impl AuditReport {
    pub fn record(&self) -> BoundRecord {
        BoundRecord {
            kind: "schedule-audit".into(),
            n: self.n,
            r: self.max_refreshes_per_session,
            k_private: self.k_private,
            sessions: self.period,
            trials: 0,
            estimate: self.min_window_total as f64,
            stderr: 0.0,
            bound: self.window_bound as f64,
            pass: self.pass,
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Audits a deterministic refresh schedule, read as one period of a repeating
/// schedule. `schedule[s]` lists the 1-based entries refreshed in session `s + 1`;
/// key entries are used in the order given by [`key_entry_index`], and a
/// session's refreshes land after its key entry is used.
pub fn audit_deterministic_schedule(schedule: &[Vec<usize>], n: usize, k_private: usize) -> AuditReport {
    let required = (n + 1).saturating_sub(k_private);
    let len = schedule.len().max(1);
    let period = len / gcd(len, n.max(1)) * n.max(1);

    let mut invalid_index_sessions = Vec::new();
    let sets: Vec<Vec<bool>> = (0..len)
        .map(|s| {
            let mut set = vec![false; n];
            for &idx in schedule.get(s).map(Vec::as_slice).unwrap_or(&[]) {
                if (1..=n).contains(&idx) {
                    set[idx - 1] = true;
                } else if invalid_index_sessions.last() != Some(&s) {
                    invalid_index_sessions.push(s);
                }
            }
            set
        })
        .collect();
    let refreshed = |s: usize, entry: usize| sets[s % len][entry - 1];
    let count = |s: usize| sets[s % len].iter().filter(|&&b| b).count();

    let mut entries = Vec::with_capacity(n);
    for entry in 1..=n {
        let mut min_gap = usize::MAX;
        for use_at in (0..period).filter(|&s| key_entry_index(n, s as u32 + 1) == entry) {
            // Next use of the same entry is n sessions later (cyclically).
            let gap = (use_at..use_at + n).filter(|&s| refreshed(s, entry)).count();
            min_gap = min_gap.min(gap);
        }
        let min_gap = if min_gap == usize::MAX { 0 } else { min_gap };
        entries.push(EntryAudit { index: entry, min_refreshes_between_uses: min_gap, meets_bound: min_gap >= required });
    }

    let min_window_total = (0..period).map(|w| (w..w + n).map(count).sum::<usize>()).min().unwrap_or(0);
    let max_per_session = (0..len).map(count).max().unwrap_or(0);
    let window_bound = n * required;
    let window_ok = min_window_total >= window_bound;
    let flagged_entries: Vec<usize> = entries.iter().filter(|e| !e.meets_bound).map(|e| e.index).collect();
    let pass = window_ok && flagged_entries.is_empty() && invalid_index_sessions.is_empty();

    AuditReport {
        n,
        k_private,
        period,
        required_refreshes_per_entry: required,
        entries,
        min_window_total,
        max_refreshes_per_session: max_per_session,
        window_bound,
        alternative_window_bound: n * (k_private + 1),
        window_ok,
        invalid_index_sessions,
        flagged_entries,
        pass,
    }
}

/// Every entry refreshed every session, for `n` sessions.
pub fn dense_schedule(n: usize) -> Vec<Vec<usize>> {
    vec![(1..=n).collect(); n]
}
