//! Versioned byte framing for key and verdict messages.
//!
//! ```text
//! +---------+-------------+-----------------+------------------+-----------------+
//! | version | protocol id | session (u32be) | bit length (u32be)| payload, MSB 1st|
//! |  0x01   | 0x00..=0x03 |                 |                  | zero padded     |
//! +---------+-------------+-----------------+------------------+-----------------+
//! ```
//!
//! Protocol id `0x00` marks a verdict; its session field is 0 and its payload
//! is one bit (`Open = 1`).

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::types::{ProtocolId, Verdict};

pub const WIRE_VERSION: u8 = 0x01;
pub const VERDICT_WIRE_ID: u8 = 0x00;
pub const HEADER_LEN: usize = 10;

/// A tag-to-verifier authentication payload.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeyMessage {
    pub protocol: ProtocolId,
    pub session_index: u32,
    pub payload: BitString,
}

impl KeyMessage {
    pub fn new(protocol: ProtocolId, session_index: u32, payload: BitString) -> Self {
        Self { protocol, session_index, payload }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VerdictMessage {
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Message {
    Key(KeyMessage),
    Verdict(VerdictMessage),
}

impl From<KeyMessage> for Message {
    fn from(m: KeyMessage) -> Self {
        Message::Key(m)
    }
}

impl From<VerdictMessage> for Message {
    fn from(m: VerdictMessage) -> Self {
        Message::Verdict(m)
    }
}

impl From<Verdict> for Message {
    fn from(verdict: Verdict) -> Self {
        Message::Verdict(VerdictMessage { verdict })
    }
}

fn frame(protocol: u8, session: u32, payload: &BitString) -> Vec<u8> {
    let bit_len = u32::try_from(payload.len()).expect("payload longer than u32::MAX bits");
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len().div_ceil(8));
    out.push(WIRE_VERSION);
    out.push(protocol);
    out.extend_from_slice(&session.to_be_bytes());
    out.extend_from_slice(&bit_len.to_be_bytes());
    out.extend_from_slice(&payload.to_bytes());
    out
}

pub fn encode_key(msg: &KeyMessage) -> Vec<u8> {
    frame(msg.protocol.wire_id(), msg.session_index, &msg.payload)
}

pub fn encode_verdict(verdict: Verdict) -> Vec<u8> {
    frame(VERDICT_WIRE_ID, 0, &BitString::from_uint(verdict.is_open() as u64, 1))
}

pub fn encode_message(msg: &Message) -> Vec<u8> {
    match msg {
        Message::Key(k) => encode_key(k),
        Message::Verdict(v) => encode_verdict(v.verdict),
    }
}

/// Decodes one frame. The input must be exactly one frame with zero padding bits.
pub fn decode_message(bytes: &[u8]) -> Result<Message> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated { needed: HEADER_LEN, got: bytes.len() });
    }
    if bytes[0] != WIRE_VERSION {
        return Err(Error::UnsupportedVersion(bytes[0]));
    }
    let protocol = bytes[1];
    let session = u32::from_be_bytes(bytes[2..6].try_into().unwrap());
    let bit_len = u32::from_be_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    let needed = bit_len.div_ceil(8);
    if body.len() < needed {
        return Err(Error::Truncated { needed: HEADER_LEN + needed, got: bytes.len() });
    }
    if body.len() > needed {
        return Err(Error::MalformedFrame(format!("{} trailing bytes", body.len() - needed)));
    }
    if !bit_len.is_multiple_of(8) && body[needed - 1] & (0xFF >> (bit_len % 8)) != 0 {
        return Err(Error::MalformedFrame("nonzero padding bits".into()));
    }
    let payload = BitString::from_bytes(body, bit_len)?;

    if protocol == VERDICT_WIRE_ID {
        if session != 0 || bit_len != 1 {
            return Err(Error::MalformedFrame("verdict must carry session 0 and one bit".into()));
        }
        let verdict = if payload.get(0) { Verdict::Open } else { Verdict::DoNotOpen };
        return Ok(Message::Verdict(VerdictMessage { verdict }));
    }
    let protocol = ProtocolId::from_wire_id(protocol).ok_or(Error::UnknownProtocol(protocol))?;
    Ok(Message::Key(KeyMessage { protocol, session_index: session, payload }))
}

/// Decodes a frame that must hold a key message.
pub fn decode_key(bytes: &[u8]) -> Result<KeyMessage> {
    match decode_message(bytes)? {
        Message::Key(k) => Ok(k),
        Message::Verdict(_) => Err(Error::MalformedFrame("expected a key message, got a verdict".into())),
    }
}
