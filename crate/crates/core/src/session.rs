//! Role traits implemented by every protocol's tag and verifier, plus
//! protocol-erased wrappers used by the channel and the FFI.

use crate::ap1::{Ap1Tag, Ap1Verifier};
use crate::ap2::{Ap2Tag, Ap2Verifier};
use crate::ap2t::{Ap2tTag, Ap2tVerifier, FrameLayout};
use crate::error::{Error, Result};
use crate::padstream::{GeneratorId, PadStream};
use crate::refresh::{RefreshMode, RefreshPolicy};
use crate::types::{ProtocolId, ProtocolParams, SecretVector, Verdict};
use crate::wire::KeyMessage;

/// The part of a party's state that must agree between an honest tag and verifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SharedState {
    pub arv: SecretVector,
    pub session_counter: u32,
    /// Chained pad seed; `None` for protocols without one.
    pub seed: Option<u64>,
}

pub trait Tag {
    fn protocol(&self) -> ProtocolId;
    /// Starts a session and returns the key message to send.
    fn begin_session(&mut self) -> Result<KeyMessage>;
    /// Applies the verifier's reply to the pending session.
    fn complete_session(&mut self, verdict: Verdict) -> Result<()>;
    fn has_pending(&self) -> bool;
    fn shared_state(&self) -> SharedState;
}

pub trait Verifier {
    fn protocol(&self) -> ProtocolId;
    /// Judges a key message. Rejection leaves the state untouched.
    fn handle(&mut self, msg: &KeyMessage) -> Verdict;
    fn shared_state(&self) -> SharedState;
    /// Frame length in bits this verifier accepts.
    fn payload_bits(&self) -> usize;
}

#[derive(Debug, Clone)]
pub enum AnyTag {
    Ap1(Ap1Tag),
    Ap2(Ap2Tag),
    Ap2t(Ap2tTag),
}

#[derive(Debug, Clone)]
pub enum AnyVerifier {
    Ap1(Ap1Verifier),
    Ap2(Ap2Verifier),
    Ap2t(Ap2tVerifier),
}

macro_rules! dispatch {
    ($self:ident, $inner:ident => $body:expr, $enum:ident) => {
        match $self {
            $enum::Ap1($inner) => $body,
            $enum::Ap2($inner) => $body,
            $enum::Ap2t($inner) => $body,
        }
    };
}

impl Tag for AnyTag {
    fn protocol(&self) -> ProtocolId {
        dispatch!(self, t => t.protocol(), AnyTag)
    }
    fn begin_session(&mut self) -> Result<KeyMessage> {
        dispatch!(self, t => t.begin_session(), AnyTag)
    }
    fn complete_session(&mut self, verdict: Verdict) -> Result<()> {
        dispatch!(self, t => t.complete_session(verdict), AnyTag)
    }
    fn has_pending(&self) -> bool {
        dispatch!(self, t => t.has_pending(), AnyTag)
    }
    fn shared_state(&self) -> SharedState {
        dispatch!(self, t => Tag::shared_state(t), AnyTag)
    }
}

impl Verifier for AnyVerifier {
    fn protocol(&self) -> ProtocolId {
        dispatch!(self, v => v.protocol(), AnyVerifier)
    }
    fn handle(&mut self, msg: &KeyMessage) -> Verdict {
        dispatch!(self, v => v.handle(msg), AnyVerifier)
    }
    fn shared_state(&self) -> SharedState {
        dispatch!(self, v => Verifier::shared_state(v), AnyVerifier)
    }
    fn payload_bits(&self) -> usize {
        dispatch!(self, v => v.payload_bits(), AnyVerifier)
    }
}

/// Everything needed to set up a fresh tag/verifier pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub protocol: ProtocolId,
    pub params: ProtocolParams,
    /// Only the first protocol supports sparse refresh.
    pub refresh: RefreshPolicy,
    /// Tamper-evident frames only; `None` picks the default layout for `params`.
    pub layout: Option<FrameLayout>,
    pub generator: GeneratorId,
}

impl PairSpec {
    pub fn new(protocol: ProtocolId, params: ProtocolParams) -> Self {
        Self { protocol, params, refresh: RefreshPolicy::dense(), layout: None, generator: GeneratorId::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.refresh.validate(self.params.n())?;
        if self.protocol != ProtocolId::Ap1 && self.refresh.mode != RefreshMode::Dense {
            return Err(Error::Config(format!("{} supports dense refresh only", self.protocol)));
        }
        if self.protocol != ProtocolId::Ap2t && self.layout.is_some() {
            return Err(Error::Config(format!("{} takes no frame layout", self.protocol)));
        }
        self.resolved_layout().map(|_| ())
    }

    /// The frame layout in effect, for tamper-evident pairs.
    pub fn resolved_layout(&self) -> Result<Option<FrameLayout>> {
        if self.protocol != ProtocolId::Ap2t {
            return Ok(None);
        }
        let layout = match self.layout {
            Some(layout) => layout,
            None => FrameLayout::for_params(&self.params, None, None)?,
        };
        if layout.m() != self.params.payload_bits() {
            return Err(Error::InvalidLayout(format!(
                "layout carries {} payload bits, params need {}",
                layout.m(),
                self.params.payload_bits()
            )));
        }
        Ok(Some(layout))
    }

    /// A synchronized pair. The shared vector is drawn from `vector_seed`; the
    /// tag's refresh values come from `tag_seed`.
    pub fn build(&self, vector_seed: u64, tag_seed: u64) -> Result<(AnyTag, AnyVerifier)> {
        self.validate()?;
        let (n, l) = (self.params.n(), self.params.l());
        let mut init = PadStream::new(vector_seed, self.generator);
        let arv = SecretVector::new(l, (0..n).map(|_| init.next_uint(l)).collect())?;
        let rng = PadStream::new(tag_seed, self.generator);
        let params = self.params.clone();
        Ok(match self.protocol {
            ProtocolId::Ap1 => (
                AnyTag::Ap1(Ap1Tag::new(arv.clone(), self.refresh, rng)?),
                AnyVerifier::Ap1(Ap1Verifier::new(arv, self.refresh)?),
            ),
            ProtocolId::Ap2 => (
                AnyTag::Ap2(Ap2Tag::ap2(params.clone(), arv.clone(), self.generator, rng)?),
                AnyVerifier::Ap2(Ap2Verifier::ap2(params, arv, self.generator)?),
            ),
            ProtocolId::Ap2t => {
                let layout = self.resolved_layout()?.expect("tamper-evident layout");
                (
                    AnyTag::Ap2t(Ap2tTag::ap2t(params.clone(), arv.clone(), layout, self.generator, rng)?),
                    AnyVerifier::Ap2t(Ap2tVerifier::ap2t(params, arv, layout, self.generator)?),
                )
            }
        })
    }
}
