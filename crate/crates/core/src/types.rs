//! Domain types shared by every protocol.
//!
//! Vector indices in the public API are 1-based (`1..=n`), matching the usual
//! presentation of the accumulated random vector. Storage is 0-based.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Largest supported entry width in bits.
pub const MAX_ENTRY_BITS: usize = 64;

pub(crate) fn mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Wire identifier of a protocol family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolId {
    /// Information-theoretic protocol: plain key entry plus refresh vector.
    Ap1,
    /// Pad-stream encapsulated protocol with keyword check.
    Ap2,
    /// Tamper-resistant variant with parity code, watermarks and permutation.
    #[serde(alias = "ap2-iima", alias = "ap2_iima")]
    Ap2t,
}

impl ProtocolId {
    pub fn wire_id(self) -> u8 {
        match self {
            ProtocolId::Ap1 => 0x01,
            ProtocolId::Ap2 => 0x02,
            ProtocolId::Ap2t => 0x03,
        }
    }

    pub fn from_wire_id(id: u8) -> Option<Self> {
        match id {
            0x01 => Some(ProtocolId::Ap1),
            0x02 => Some(ProtocolId::Ap2),
            0x03 => Some(ProtocolId::Ap2t),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Ap1 => "ap1",
            ProtocolId::Ap2 => "ap2",
            ProtocolId::Ap2t => "ap2t",
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProtocolId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ap1" => Ok(ProtocolId::Ap1),
            "ap2" => Ok(ProtocolId::Ap2),
            "ap2t" | "ap2-iima" | "ap2_iima" => Ok(ProtocolId::Ap2t),
            other => Err(Error::Config(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Verifier reply. Encoded on the wire as a single bit, `Open = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Open,
    DoNotOpen,
}

impl Verdict {
    pub fn is_open(self) -> bool {
        self == Verdict::Open
    }
}

/// Sizes shared by a tag/verifier pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolParams {
    n: usize,
    l: usize,
    keyword_len: usize,
    keywords: Vec<BitString>,
}

impl ProtocolParams {
    pub fn new(n: usize, l: usize, keyword_len: usize, keywords: Vec<BitString>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n must be at least 2, got {n}")));
        }
        if l == 0 || l > MAX_ENTRY_BITS {
            return Err(Error::InvalidParams(format!("l must be in 1..={MAX_ENTRY_BITS}, got {l}")));
        }
        if keyword_len == 0 {
            return Err(Error::InvalidParams("keyword_len must be positive".into()));
        }
        if keywords.is_empty() {
            return Err(Error::InvalidParams("keyword set is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for kw in &keywords {
            if kw.len() != keyword_len {
                return Err(Error::InvalidParams(format!(
                    "keyword {kw} has {} bits, expected {keyword_len}",
                    kw.len()
                )));
            }
            if !seen.insert(kw.to_string()) {
                return Err(Error::InvalidParams(format!("duplicate keyword {kw}")));
            }
        }
        Ok(Self { n, l, keyword_len, keywords })
    }

    /// Parameters with the single default keyword of `keyword_len` bits.
    pub fn with_default_keyword(n: usize, l: usize, keyword_len: usize) -> Result<Self> {
        Self::new(n, l, keyword_len, vec![default_keyword(keyword_len)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn keyword_len(&self) -> usize {
        self.keyword_len
    }

    pub fn keywords(&self) -> &[BitString] {
        &self.keywords
    }

    pub fn is_keyword(&self, candidate: &BitString) -> bool {
        self.keywords.iter().any(|k| k == candidate)
    }

    /// Plaintext length `n·l + keyword_len` of a pad-encapsulated message.
    pub fn payload_bits(&self) -> usize {
        self.n * self.l + self.keyword_len
    }

    pub fn entry_mask(&self) -> u64 {
        mask(self.l)
    }
}

/// The default "open" command word: the byte `0xA5` repeated and truncated.
pub fn default_keyword(len: usize) -> BitString {
    (0..len).map(|i| (0xA5u8 >> (7 - i % 8)) & 1 == 1).collect()
}

/// The shared accumulated vector of `n` entries, each `l` bits wide.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecretVector {
    width: usize,
    entries: Vec<u64>,
}

impl SecretVector {
    pub fn new(width: usize, entries: Vec<u64>) -> Result<Self> {
        if width == 0 || width > MAX_ENTRY_BITS {
            return Err(Error::InvalidParams(format!("entry width {width} out of range")));
        }
        if let Some(&value) = entries.iter().find(|&&v| v & !mask(width) != 0) {
            return Err(Error::ValueTooWide { value, width });
        }
        Ok(Self { width, entries })
    }

    pub fn zeros(n: usize, width: usize) -> Self {
        Self { width, entries: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Entry at 1-based `index`. Panics when out of range.
    pub fn entry(&self, index: usize) -> u64 {
        assert!((1..=self.len()).contains(&index), "index {index} outside 1..={}", self.len());
        self.entries[index - 1]
    }

    pub fn get(&self, index: usize) -> Result<u64> {
        self.check_index(index)?;
        Ok(self.entries[index - 1])
    }

    pub fn set(&mut self, index: usize, value: u64) -> Result<()> {
        self.check_index(index)?;
        if value & !mask(self.width) != 0 {
            return Err(Error::ValueTooWide { value, width: self.width });
        }
        self.entries[index - 1] = value;
        Ok(())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [u64] {
        &mut self.entries
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if (1..=self.len()).contains(&index) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index, n: self.len() })
        }
    }
}

impl fmt::Debug for SecretVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretVector[l={}]{:x?}", self.width, self.entries)
    }
}

/// Fresh randomness sent with a session, either for every entry or for a
/// chosen subset of entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RefreshVector {
    Dense(Vec<u64>),
    /// `(index, value)` pairs with distinct 1-based indices.
    Sparse(Vec<(usize, u64)>),
}

impl RefreshVector {
    pub fn dense(entries: Vec<u64>) -> Self {
        RefreshVector::Dense(entries)
    }

    pub fn sparse(n: usize, pairs: Vec<(usize, u64)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &(idx, _) in &pairs {
            if !(1..=n).contains(&idx) {
                return Err(Error::IndexOutOfRange { index: idx, n });
            }
            if !seen.insert(idx) {
                return Err(Error::DuplicateIndex(idx));
            }
        }
        Ok(RefreshVector::Sparse(pairs))
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, RefreshVector::Dense(_))
    }
}
