//! Pad-encapsulated protocol with keyword acceptance.
//!
//! Each session the tag derives `seed' = ARV[keyentry] ⊕ seed`, expands it
//! into a pad of `m = n·l + keyword_len` bits and sends
//! `Y = (LRV ∥ keyword) ⊕ pad`. The verifier recomputes the pad from its own
//! copy of the vector, and opens iff the decrypted suffix is a valid keyword.
//! The seed and vector move forward only on `Open`; a rejected session is a
//! full rollback on both sides.
//!
//! [`PadTag`] and [`PadVerifier`] are generic over the [`Encapsulation`] that
//! turns a plaintext into a frame. [`PlainPad`] is the construction above; the
//! tamper-evident frame lives in [`crate::ap2t`].

use std::fmt::Debug;

use crate::ap1::{key_entry_index, updating_procedure};
use crate::bits::{xor_bits, BitString};
use crate::error::{Error, Result};
use crate::padstream::{GeneratorId, PadStream, SeedState};
use crate::session::{SharedState, Tag, Verifier};
use crate::types::{ProtocolId, ProtocolParams, RefreshVector, SecretVector, Verdict};
use crate::wire::KeyMessage;

/// How a `(LRV ∥ keyword)` plaintext is hidden under a session's master seed.
pub trait Encapsulation: Clone + Debug + Send + Sync {
    fn protocol(&self) -> ProtocolId;
    /// Frame length in bits for plaintexts of `params.payload_bits()`.
    fn frame_bits(&self, params: &ProtocolParams) -> usize;
    fn seal(&self, master: u64, plaintext: &BitString, generator: GeneratorId) -> BitString;
    /// Recovers the plaintext, or `None` if any integrity check fails.
    /// The keyword check is left to the caller.
    fn open(&self, master: u64, frame: &BitString, params: &ProtocolParams, generator: GeneratorId) -> Option<BitString>;
}

/// `Y = plaintext ⊕ pad(master)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlainPad;

/// Xors `plaintext` with an equally long pad.
pub fn seal_with_pad(plaintext: &BitString, pad: &BitString) -> Result<BitString> {
    xor_bits(plaintext, pad)
}

impl Encapsulation for PlainPad {
    fn protocol(&self) -> ProtocolId {
        ProtocolId::Ap2
    }

    fn frame_bits(&self, params: &ProtocolParams) -> usize {
        params.payload_bits()
    }

    fn seal(&self, master: u64, plaintext: &BitString, generator: GeneratorId) -> BitString {
        let pad = PadStream::new(master, generator).next_bits(plaintext.len());
        seal_with_pad(plaintext, &pad).expect("pad has plaintext length")
    }

    fn open(&self, master: u64, frame: &BitString, params: &ProtocolParams, generator: GeneratorId) -> Option<BitString> {
        if frame.len() != params.payload_bits() {
            return None;
        }
        let pad = PadStream::new(master, generator).next_bits(frame.len());
        xor_bits(frame, &pad).ok()
    }
}

/// `LRV ∥ keyword`, each LRV entry `l` bits.
pub fn build_plaintext(lrv: &[u64], keyword: &BitString, l: usize) -> BitString {
    let mut out = BitString::with_capacity(lrv.len() * l + keyword.len());
    lrv.iter().for_each(|&v| out.push_uint(v, l));
    out.extend_from(keyword);
    out
}

/// Splits a plaintext back into dense LRV entries and the keyword.
pub fn split_plaintext(plaintext: &BitString, params: &ProtocolParams) -> (Vec<u64>, BitString) {
    let (n, l) = (params.n(), params.l());
    let lrv = (0..n).map(|j| plaintext.read_uint(j * l, l)).collect();
    (lrv, plaintext.slice(n * l, plaintext.len()))
}

/// State both roles share.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ChainState {
    params: ProtocolParams,
    arv: SecretVector,
    i: u32,
    seed: SeedState,
    generator: GeneratorId,
}

impl ChainState {
    fn new(params: ProtocolParams, arv: SecretVector, generator: GeneratorId) -> Result<Self> {
        if arv.len() != params.n() || arv.width() != params.l() {
            return Err(Error::InvalidParams(format!(
                "vector is {}x{} bits, params say {}x{}",
                arv.len(),
                arv.width(),
                params.n(),
                params.l()
            )));
        }
        Ok(Self { params, arv, i: 1, seed: SeedState::new(), generator })
    }

    fn keyentry(&self) -> usize {
        key_entry_index(self.params.n(), self.i)
    }

    /// Seed this session would use, without committing it.
    fn master_seed(&self) -> u64 {
        self.seed.chained(self.arv.entry(self.keyentry()))
    }

    fn commit(&mut self, lrv: Vec<u64>, master: u64) -> Result<()> {
        self.arv = updating_procedure(&self.arv, self.keyentry(), &RefreshVector::Dense(lrv))?;
        self.seed = SeedState::from_value(master);
        self.i = self.i.wrapping_add(1).max(1);
        Ok(())
    }

    fn shared(&self) -> SharedState {
        SharedState { arv: self.arv.clone(), session_counter: self.i, seed: Some(self.seed.value()) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Pending {
    lrv: Vec<u64>,
    keyword: BitString,
    staged_seed: u64,
}

#[derive(Debug, Clone)]
pub struct PadTag<E: Encapsulation> {
    state: ChainState,
    encapsulation: E,
    rng: PadStream,
    pending: Option<Pending>,
}

pub type Ap2Tag = PadTag<PlainPad>;
pub type Ap2Verifier = PadVerifier<PlainPad>;

impl Ap2Tag {
    pub fn ap2(params: ProtocolParams, arv: SecretVector, generator: GeneratorId, rng: PadStream) -> Result<Self> {
        Self::new(params, arv, PlainPad, generator, rng)
    }
}

impl Ap2Verifier {
    pub fn ap2(params: ProtocolParams, arv: SecretVector, generator: GeneratorId) -> Result<Self> {
        Self::new(params, arv, PlainPad, generator)
    }
}

impl<E: Encapsulation> PadTag<E> {
    /// `generator` produces the pads; `rng` is the tag's private source of refresh values.
    pub fn new(params: ProtocolParams, arv: SecretVector, encapsulation: E, generator: GeneratorId, rng: PadStream) -> Result<Self> {
        Ok(Self { state: ChainState::new(params, arv, generator)?, encapsulation, rng, pending: None })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.state.params
    }

    pub fn arv(&self) -> &SecretVector {
        &self.state.arv
    }

    pub fn seed(&self) -> u64 {
        self.state.seed.value()
    }

    pub fn session_counter(&self) -> u32 {
        self.state.i
    }

    pub fn encapsulation(&self) -> &E {
        &self.encapsulation
    }

    /// The refresh values and keyword of the pending session, if any.
    pub fn pending_plaintext(&self) -> Option<BitString> {
        self.pending.as_ref().map(|p| build_plaintext(&p.lrv, &p.keyword, self.state.params.l()))
    }

    /// Builds the key message for `keyword`, staging the new seed until the verdict arrives.
    pub fn build_message(&mut self, keyword: &BitString) -> Result<KeyMessage> {
        if self.pending.is_some() {
            return Err(Error::SessionPending);
        }
        if !self.state.params.is_keyword(keyword) {
            return Err(Error::UnknownKeyword(keyword.to_string()));
        }
        let (n, l) = (self.state.params.n(), self.state.params.l());
        let lrv: Vec<u64> = (0..n).map(|_| self.rng.next_uint(l)).collect();
        let master = self.state.master_seed();
        let frame = self.encapsulation.seal(master, &build_plaintext(&lrv, keyword, l), self.state.generator);
        self.pending = Some(Pending { lrv, keyword: keyword.clone(), staged_seed: master });
        Ok(KeyMessage::new(self.encapsulation.protocol(), self.state.i, frame))
    }
}

impl<E: Encapsulation> Tag for PadTag<E> {
    fn protocol(&self) -> ProtocolId {
        self.encapsulation.protocol()
    }

    /// Uses the first configured keyword.
    fn begin_session(&mut self) -> Result<KeyMessage> {
        let keyword = self.state.params.keywords()[0].clone();
        self.build_message(&keyword)
    }

    fn complete_session(&mut self, verdict: Verdict) -> Result<()> {
        let pending = self.pending.take().ok_or(Error::NoPendingSession)?;
        if verdict.is_open() {
            self.state.commit(pending.lrv, pending.staged_seed)?;
        }
        Ok(())
    }

    fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    fn shared_state(&self) -> SharedState {
        self.state.shared()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadVerifier<E: Encapsulation> {
    state: ChainState,
    encapsulation: E,
}

impl<E: Encapsulation> PadVerifier<E> {
    pub fn new(params: ProtocolParams, arv: SecretVector, encapsulation: E, generator: GeneratorId) -> Result<Self> {
        Ok(Self { state: ChainState::new(params, arv, generator)?, encapsulation })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.state.params
    }

    pub fn arv(&self) -> &SecretVector {
        &self.state.arv
    }

    pub fn seed(&self) -> u64 {
        self.state.seed.value()
    }

    pub fn session_counter(&self) -> u32 {
        self.state.i
    }

    pub fn generator(&self) -> GeneratorId {
        self.state.generator
    }

    pub fn encapsulation(&self) -> &E {
        &self.encapsulation
    }

    /// Decrypts and checks a frame without changing state. Returns the accepted plaintext.
    pub fn inspect(&self, msg: &KeyMessage) -> Option<BitString> {
        if msg.protocol != self.encapsulation.protocol() {
            return None;
        }
        let master = self.state.master_seed();
        let plaintext = self.encapsulation.open(master, &msg.payload, &self.state.params, self.state.generator)?;
        let keyword = plaintext.slice(self.state.params.n() * self.state.params.l(), plaintext.len());
        self.state.params.is_keyword(&keyword).then_some(plaintext)
    }
}

impl<E: Encapsulation> Verifier for PadVerifier<E> {
    fn protocol(&self) -> ProtocolId {
        self.encapsulation.protocol()
    }

    fn handle(&mut self, msg: &KeyMessage) -> Verdict {
        let Some(plaintext) = self.inspect(msg) else {
            return Verdict::DoNotOpen;
        };
        let master = self.state.master_seed();
        let (lrv, _) = split_plaintext(&plaintext, &self.state.params);
        match self.state.commit(lrv, master) {
            Ok(()) => Verdict::Open,
            Err(_) => Verdict::DoNotOpen,
        }
    }

    fn shared_state(&self) -> SharedState {
        self.state.shared()
    }

    fn payload_bits(&self) -> usize {
        self.encapsulation.frame_bits(&self.state.params)
    }
}
