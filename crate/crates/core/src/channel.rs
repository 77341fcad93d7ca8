//! Session-by-session simulation of one tag and one verifier under attack.
//!
//! Each primary session is an honest tag session, optionally preceded by an
//! adversary session (impersonation) or edited in flight (bit flips). A
//! rejected session is followed by honest retries; `2n` rejected retries in a
//! row count as a deadlock and end the run.
//!
//! Adversaries keep an explicit [`Knowledge`] of the verifier's secrets and
//! always play their best guess, so measured forgery rates are those of an
//! optimal guesser with the modeled view of the channel.

use std::io::{BufRead, Write};
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::ap1::{draw_refresh, encode_ap1_payload, key_entry_index, parse_ap1_payload, Ap1Verifier};
use crate::ap2::{build_plaintext, split_plaintext, Encapsulation, PadVerifier};
use crate::ap2t::compute_security_bound;
use crate::error::{Error, Result};
use crate::padstream::PadStream;
use crate::refresh::{choose_refresh_set, RefreshMode};
use crate::session::{AnyTag, AnyVerifier, SharedState, Tag, Verifier};
use crate::types::{RefreshVector, Verdict};
use crate::wire::{encode_key, KeyMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    /// No adversary; every session is honest and unobserved.
    #[default]
    None,
    /// Listens only. Each attacked session is probed on a copy of the verifier.
    Eavesdrop,
    /// Sends a complete forged session before each attacked honest session. Needs atomic sessions.
    Impersonate,
    /// Flips bits of the tag's frame in flight. Needs non-atomic sessions.
    BitflipIima,
}

impl AdversaryKind {
    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::None => "none",
            AdversaryKind::Eavesdrop => "eavesdrop",
            AdversaryKind::Impersonate => "impersonate",
            AdversaryKind::BitflipIima => "bitflip-iima",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Misses packed at the start of each block of `window` sessions.
    #[default]
    Adjacent,
    /// Misses placed at random, subject to the window rule.
    Random,
}

/// Which sessions the adversary hears.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ListeningPattern {
    #[default]
    Always,
    Never,
    /// Session `s` is heard iff `heard[s % heard.len()]`; empty means never.
    Schedule { heard: Vec<bool> },
    /// At least `k_private` misses in every `window` consecutive sessions.
    KPrivate { window: usize, k_private: usize, #[serde(default)] placement: Placement },
}

impl ListeningPattern {
    pub fn realize(&self, rng: &mut PadStream, sessions: usize) -> Result<Vec<bool>> {
        Ok(match self {
            ListeningPattern::Always => vec![true; sessions],
            ListeningPattern::Never => vec![false; sessions],
            ListeningPattern::Schedule { heard } if heard.is_empty() => vec![false; sessions],
            ListeningPattern::Schedule { heard } => (0..sessions).map(|s| heard[s % heard.len()]).collect(),
            ListeningPattern::KPrivate { window, k_private, placement } => {
                build_listening_pattern(rng, *window, *k_private, sessions, *placement)?
            }
        })
    }
}

/// A schedule of `sessions` flags (`true` = heard) in which every `window`
/// consecutive sessions contain at least `k_private` misses.
pub fn build_listening_pattern(
    rng: &mut PadStream,
    window: usize,
    k_private: usize,
    sessions: usize,
    placement: Placement,
) -> Result<Vec<bool>> {
    if k_private == 0 || k_private > window || window > sessions {
        return Err(Error::InfeasiblePattern(format!(
            "need 1 <= k_private <= window <= sessions, got k_private={k_private}, window={window}, sessions={sessions}"
        )));
    }
    if placement == Placement::Adjacent {
        return Ok((0..sessions).map(|s| s % window >= k_private).collect());
    }
    let mut heard: Vec<bool> = Vec::with_capacity(sessions);
    for p in 0..sessions {
        // The first full window that contains p ends at `end`; if p is heard,
        // that window can still collect at most `misses + (end - p)` misses.
        let end = p.max(window - 1);
        let start = end + 1 - window;
        let misses = heard[start..p].iter().filter(|&&h| !h).count();
        let forced = misses + (end - p) < k_private;
        let miss = forced || rng.uniform_below(window as u64) < k_private as u64;
        heard.push(!miss);
    }
    Ok(heard)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AdversaryModel {
    pub kind: AdversaryKind,
    #[serde(default)]
    pub listening: ListeningPattern,
    /// Primary sessions before this index are left alone.
    #[serde(default)]
    pub attack_from: usize,
    /// The adversary receives a full copy of the verifier's secrets just before this session.
    #[serde(default)]
    pub leak_before: Option<usize>,
    /// Bits flipped per tampered frame. Defaults to the code distance for
    /// tamper-evident frames and 1 otherwise.
    #[serde(default)]
    pub flips: Option<usize>,
}

impl AdversaryModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn of_kind(kind: AdversaryKind, listening: ListeningPattern) -> Self {
        Self { kind, listening, ..Self::default() }
    }

    pub fn bitflip(flips: Option<usize>) -> Self {
        Self { kind: AdversaryKind::BitflipIima, flips, ..Self::default() }
    }

    pub fn attack_from(mut self, session: usize) -> Self {
        self.attack_from = session;
        self
    }

    pub fn leak_before(mut self, session: usize) -> Self {
        self.leak_before = Some(session);
        self
    }

    pub fn check(&self, atomic: bool) -> Result<()> {
        match self.kind {
            AdversaryKind::Impersonate if !atomic => {
                Err(Error::Config("impersonation injects whole sessions and needs atomic sessions".into()))
            }
            AdversaryKind::BitflipIima if atomic => {
                Err(Error::Config("bitflip-iima edits frames in flight and needs atomic = false".into()))
            }
            AdversaryKind::BitflipIima if self.flips == Some(0) => Err(Error::Config("flips must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// What the adversary believes about one secret value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Belief {
    Exact(u64),
    /// Most probable value, but not certain.
    Likely(u64),
    Unknown,
}

impl Belief {
    pub fn guess(self) -> Option<u64> {
        match self {
            Belief::Exact(v) | Belief::Likely(v) => Some(v),
            Belief::Unknown => None,
        }
    }

    pub fn xor(self, other: Belief) -> Belief {
        match (self, other) {
            (Belief::Exact(a), Belief::Exact(b)) => Belief::Exact(a ^ b),
            (Belief::Unknown, _) | (_, Belief::Unknown) => Belief::Unknown,
            (a, b) => Belief::Likely(a.guess().unwrap() ^ b.guess().unwrap()),
        }
    }

    fn demote(self) -> Belief {
        match self {
            Belief::Exact(v) => Belief::Likely(v),
            other => other,
        }
    }
}

/// The adversary's view of the verifier's vector and chained seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Knowledge {
    pub entries: Vec<Belief>,
    /// The seed chain starts at a public zero.
    pub seed: Belief,
}

impl Knowledge {
    pub fn blind(n: usize) -> Self {
        Self { entries: vec![Belief::Unknown; n], seed: Belief::Exact(0) }
    }

    pub fn leaked(state: &SharedState) -> Self {
        Self {
            entries: state.arv.as_slice().iter().map(|&v| Belief::Exact(v)).collect(),
            seed: Belief::Exact(state.seed.unwrap_or(0)),
        }
    }

    pub fn key(&self, keyentry: usize) -> Belief {
        self.entries[keyentry - 1]
    }

    /// Pad seed of the session keyed by `keyentry`.
    pub fn master(&self, keyentry: usize) -> Belief {
        self.key(keyentry).xor(self.seed)
    }

    /// Follows one accepted session. `refresh` is `None` when its values stayed hidden.
    pub fn accepted_session(&mut self, keyentry: usize, used_key: Option<u64>, refresh: Option<&RefreshVector>, mode: RefreshMode) {
        if let Some(key) = used_key {
            self.entries[keyentry - 1] = Belief::Exact(key);
        }
        self.seed = self.master(keyentry);
        self.entries[keyentry - 1] = Belief::Exact(0);
        match refresh {
            Some(RefreshVector::Dense(values)) => {
                for (entry, &v) in self.entries.iter_mut().zip(values) {
                    *entry = entry.xor(Belief::Exact(v));
                }
            }
            Some(RefreshVector::Sparse(pairs)) => {
                for &(idx, v) in pairs {
                    self.entries[idx - 1] = self.entries[idx - 1].xor(Belief::Exact(v));
                }
            }
            None if mode == RefreshMode::Dense => self.entries.fill(Belief::Unknown),
            // Unrefreshed entries keep their values, so old values stay the best guess.
            None => self.entries.iter_mut().for_each(|e| *e = e.demote()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Tag,
    Retry,
    Adversary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub session_index: u32,
    pub origin: Origin,
    /// Hex of the wire frame the verifier received.
    pub tag_message: Option<String>,
    pub verdict: Option<Verdict>,
    pub observed_by_adversary: bool,
    pub tampered: bool,
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(transcripts: &[SessionTranscript], mut out: W) -> std::io::Result<()> {
    for t in transcripts {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<SessionTranscript>> {
    input
        .lines()
        .filter(|line| !matches!(line, Ok(l) if l.trim().is_empty()))
        .map(|line| {
            let line = line.map_err(|e| Error::Config(e.to_string()))?;
            serde_json::from_str(&line).map_err(|e| Error::Config(e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub sessions: u64,
    /// Untampered tag sessions, retries included.
    pub honest_sessions: u64,
    pub honest_accepts: u64,
    pub tampered: u64,
    pub adversary_attempts: u64,
    pub adversary_successes: u64,
    pub deadlocks: u64,
}

impl AddAssign for RunStats {
    fn add_assign(&mut self, o: Self) {
        self.sessions += o.sessions;
        self.honest_sessions += o.honest_sessions;
        self.honest_accepts += o.honest_accepts;
        self.tampered += o.tampered;
        self.adversary_attempts += o.adversary_attempts;
        self.adversary_successes += o.adversary_successes;
        self.deadlocks += o.deadlocks;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub atomic: bool,
    pub record: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunOutcome {
    pub transcripts: Vec<SessionTranscript>,
    pub stats: RunStats,
}

fn entry_count(verifier: &AnyVerifier) -> usize {
    match verifier {
        AnyVerifier::Ap1(v) => v.arv().len(),
        AnyVerifier::Ap2(v) => v.params().n(),
        AnyVerifier::Ap2t(v) => v.params().n(),
    }
}

fn counter(verifier: &AnyVerifier) -> u32 {
    match verifier {
        AnyVerifier::Ap1(v) => v.session_counter(),
        AnyVerifier::Ap2(v) => v.session_counter(),
        AnyVerifier::Ap2t(v) => v.session_counter(),
    }
}

/// Bits flipped per tampered frame when the model leaves it open.
pub fn default_flips(verifier: &AnyVerifier) -> usize {
    match verifier {
        AnyVerifier::Ap2t(v) => compute_security_bound(v.encapsulation().layout()).d_min,
        _ => 1,
    }
}

struct Adversary {
    knowledge: Knowledge,
    rng: PadStream,
    last_frame: Option<KeyMessage>,
}

impl Adversary {
    fn forge(&mut self, verifier: &AnyVerifier) -> KeyMessage {
        match verifier {
            AnyVerifier::Ap1(v) => self.forge_ap1(v),
            AnyVerifier::Ap2(v) => self.forge_pad(v),
            AnyVerifier::Ap2t(v) => self.forge_pad(v),
        }
    }

    fn forge_ap1(&mut self, v: &Ap1Verifier) -> KeyMessage {
        let (n, l) = (v.arv().len(), v.arv().width());
        let key = self.knowledge.key(v.current_key_entry()).guess().unwrap_or_else(|| self.rng.next_uint(l));
        let lrv = draw_refresh(&mut self.rng, n, l, v.policy()).expect("validated policy");
        KeyMessage::new(v.protocol(), v.session_counter(), encode_ap1_payload(key, &lrv, n, l))
    }

    fn forge_pad<E: Encapsulation>(&mut self, v: &PadVerifier<E>) -> KeyMessage {
        let params = v.params();
        let keyentry = key_entry_index(params.n(), v.session_counter());
        let payload = match self.knowledge.master(keyentry).guess() {
            Some(master) => {
                let lrv: Vec<u64> = (0..params.n()).map(|_| self.rng.next_uint(params.l())).collect();
                let plaintext = build_plaintext(&lrv, &params.keywords()[0], params.l());
                v.encapsulation().seal(master, &plaintext, v.generator())
            }
            None => match &self.last_frame {
                Some(frame) if frame.payload.len() == v.payload_bits() => frame.payload.clone(),
                _ => self.rng.next_bits(v.payload_bits()),
            },
        };
        KeyMessage::new(v.protocol(), v.session_counter(), payload)
    }

    /// Updates knowledge after the verifier accepted a session keyed by `keyentry`.
    fn learn(&mut self, verifier: &AnyVerifier, keyentry: usize, seen: Option<&KeyMessage>) {
        match verifier {
            AnyVerifier::Ap1(v) => {
                let parsed = seen.and_then(|m| parse_ap1_payload(&m.payload, v.arv().len(), v.arv().width(), v.policy()).ok());
                let (key, lrv) = parsed.map_or((None, None), |(k, r)| (Some(k), Some(r)));
                self.knowledge.accepted_session(keyentry, key, lrv.as_ref(), v.policy().mode);
            }
            AnyVerifier::Ap2(v) => self.learn_pad(v, keyentry, seen),
            AnyVerifier::Ap2t(v) => self.learn_pad(v, keyentry, seen),
        }
    }

    fn learn_pad<E: Encapsulation>(&mut self, v: &PadVerifier<E>, keyentry: usize, seen: Option<&KeyMessage>) {
        let guess = self.knowledge.master(keyentry).guess();
        let opened = seen.zip(guess).and_then(|(m, master)| {
            v.encapsulation().open(master, &m.payload, v.params(), v.generator()).map(|pt| (master, pt))
        });
        match opened {
            Some((master, plaintext)) => {
                let key = self.knowledge.key(keyentry).guess();
                let (lrv, _) = split_plaintext(&plaintext, v.params());
                self.knowledge.accepted_session(keyentry, key, Some(&RefreshVector::Dense(lrv)), RefreshMode::Dense);
                self.knowledge.seed = Belief::Exact(master);
            }
            None => self.knowledge.accepted_session(keyentry, None, None, RefreshMode::Dense),
        }
    }
}

struct Recorder {
    enabled: bool,
    transcripts: Vec<SessionTranscript>,
}

impl Recorder {
    fn push(&mut self, origin: Origin, msg: &KeyMessage, verdict: Verdict, observed: bool, tampered: bool) {
        if self.enabled {
            self.transcripts.push(SessionTranscript {
                session_index: msg.session_index,
                origin,
                tag_message: Some(hex::encode(encode_key(msg))),
                verdict: Some(verdict),
                observed_by_adversary: observed,
                tampered,
            });
        }
    }
}

/// Runs `count` primary sessions between `tag` and `verifier` under `adversary`.
///
/// `rng` drives the adversary: its listening schedule, guesses and flip positions.
pub fn run_sessions(
    tag: &mut AnyTag,
    verifier: &mut AnyVerifier,
    adversary: &AdversaryModel,
    count: usize,
    options: RunOptions,
    rng: PadStream,
) -> Result<RunOutcome> {
    if tag.protocol() != verifier.protocol() {
        return Err(Error::ProtocolMismatch { expected: verifier.protocol().to_string(), got: tag.protocol().to_string() });
    }
    adversary.check(options.atomic)?;
    let n = entry_count(verifier);
    let mut adv = Adversary { knowledge: Knowledge::blind(n), rng, last_frame: None };
    let present = adversary.kind != AdversaryKind::None;
    let schedule = adversary.listening.realize(&mut adv.rng, count)?;
    let flips = adversary.flips.unwrap_or_else(|| default_flips(verifier));
    let mut stats = RunStats::default();
    let mut rec = Recorder { enabled: options.record, transcripts: Vec::new() };

    for (s, &listening) in schedule.iter().enumerate() {
        if adversary.leak_before == Some(s) {
            adv.knowledge = Knowledge::leaked(&Verifier::shared_state(verifier));
        }
        let heard = present && listening;
        let attacking = present && s >= adversary.attack_from;
        stats.sessions += 1;

        match adversary.kind {
            AdversaryKind::Eavesdrop if attacking => {
                let forged = adv.forge(verifier);
                stats.adversary_attempts += 1;
                if verifier.clone().handle(&forged).is_open() {
                    stats.adversary_successes += 1;
                }
            }
            AdversaryKind::Impersonate if attacking => {
                let keyentry = key_entry_index(n, counter(verifier));
                let forged = adv.forge(verifier);
                stats.adversary_attempts += 1;
                let verdict = verifier.handle(&forged);
                rec.push(Origin::Adversary, &forged, verdict, true, false);
                if verdict.is_open() {
                    stats.adversary_successes += 1;
                    adv.learn(verifier, keyentry, Some(&forged));
                }
            }
            _ => {}
        }

        let keyentry = key_entry_index(n, counter(verifier));
        let msg = tag.begin_session()?;
        let tamper = adversary.kind == AdversaryKind::BitflipIima && attacking && heard;
        let (delivered, verdict) = if tamper {
            let mut edited = msg.clone();
            let len = edited.payload.len();
            for pos in choose_refresh_set(&mut adv.rng, len, flips.min(len))? {
                edited.payload.flip(pos - 1);
            }
            let mut reference = verifier.clone();
            reference.handle(&msg);
            let verdict = verifier.handle(&edited);
            stats.tampered += 1;
            stats.adversary_attempts += 1;
            if verdict.is_open() && Verifier::shared_state(verifier) != Verifier::shared_state(&reference) {
                stats.adversary_successes += 1;
            }
            (edited, verdict)
        } else {
            let verdict = verifier.handle(&msg);
            stats.honest_sessions += 1;
            stats.honest_accepts += verdict.is_open() as u64;
            (msg, verdict)
        };
        tag.complete_session(verdict)?;
        rec.push(Origin::Tag, &delivered, verdict, heard, tamper);
        if heard {
            adv.last_frame = Some(delivered.clone());
        }
        if verdict.is_open() {
            adv.learn(verifier, keyentry, heard.then_some(&delivered));
            continue;
        }

        let mut rejects = usize::from(!tamper);
        let mut deadlocked = rejects >= 2 * n;
        while !deadlocked {
            let keyentry = key_entry_index(n, counter(verifier));
            let retry = tag.begin_session()?;
            let verdict = verifier.handle(&retry);
            tag.complete_session(verdict)?;
            stats.honest_sessions += 1;
            rec.push(Origin::Retry, &retry, verdict, heard, false);
            if verdict.is_open() {
                stats.honest_accepts += 1;
                adv.learn(verifier, keyentry, heard.then_some(&retry));
                break;
            }
            rejects += 1;
            deadlocked = rejects >= 2 * n;
        }
        if deadlocked {
            stats.deadlocks += 1;
            break;
        }
    }
    Ok(RunOutcome { transcripts: rec.transcripts, stats })
}
