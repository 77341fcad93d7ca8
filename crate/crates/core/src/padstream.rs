//! Seeded deterministic bit streams and the chained seed.
//!
//! A [`PadStream`] is a bit cursor over the 64-bit words produced by a
//! registered generator. Words are consumed most significant bit first, so
//! `next_uint(64)` on a fresh stream returns the generator's first word.
//!
//! The generators here are not cryptographic. They stand in for whatever
//! one-way pad generator a deployment chooses; protocol code only sees
//! [`GeneratorId`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// State substituted for a zero seed; xorshift generators are stuck at 0.
pub const ZERO_SEED_REMAP: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum GeneratorId {
    /// xorshift64*: 12/25/27 shifts with a final multiply by an odd constant.
    #[default]
    #[serde(rename = "xorshift64star")]
    XorShift64Star,
    /// splitmix64, a Weyl sequence with a mixing finalizer.
    #[serde(rename = "splitmix64")]
    SplitMix64,
}

impl GeneratorId {
    pub const ALL: [GeneratorId; 2] = [GeneratorId::XorShift64Star, GeneratorId::SplitMix64];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorId::XorShift64Star => "xorshift64star",
            GeneratorId::SplitMix64 => "splitmix64",
        }
    }
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorId::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownGenerator(s.to_string()))
    }
}

/// Deterministic bit stream for one `(generator, seed)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadStream {
    generator: GeneratorId,
    state: u64,
    word: u64,
    word_bits_left: u32,
    bits_emitted: u64,
}

impl PadStream {
    pub fn new(seed: u64, generator: GeneratorId) -> Self {
        let state = if seed == 0 { ZERO_SEED_REMAP } else { seed };
        Self { generator, state, word: 0, word_bits_left: 0, bits_emitted: 0 }
    }

    /// Looks the generator up by its registered name.
    pub fn with_generator_name(seed: u64, generator: &str) -> Result<Self> {
        Ok(Self::new(seed, generator.parse()?))
    }

    pub fn generator(&self) -> GeneratorId {
        self.generator
    }

    pub fn bits_emitted(&self) -> u64 {
        self.bits_emitted
    }

    fn next_word(&mut self) -> u64 {
        match self.generator {
            GeneratorId::XorShift64Star => {
                let mut x = self.state;
                x ^= x >> 12;
                x ^= x << 25;
                x ^= x >> 27;
                self.state = x;
                x.wrapping_mul(0x2545_F491_4F6C_DD1D)
            }
            GeneratorId::SplitMix64 => {
                self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
                let mut z = self.state;
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                z ^ (z >> 31)
            }
        }
    }

    /// Next `width` bits (at most 64) as an unsigned integer, first bit most significant.
    pub fn next_uint(&mut self, width: usize) -> u64 {
        assert!(width <= 64, "uint width {width} exceeds 64 bits");
        let mut out = 0u64;
        let mut remaining = width as u32;
        while remaining > 0 {
            if self.word_bits_left == 0 {
                self.word = self.next_word();
                self.word_bits_left = 64;
            }
            let take = remaining.min(self.word_bits_left);
            let shift = self.word_bits_left - take;
            let chunk = (self.word >> shift) & crate::types::mask(take as usize);
            out = if take == 64 { chunk } else { (out << take) | chunk };
            self.word_bits_left -= take;
            remaining -= take;
        }
        self.bits_emitted += width as u64;
        out
    }

    pub fn next_u64(&mut self) -> u64 {
        self.next_uint(64)
    }

    pub fn next_bits(&mut self, count: usize) -> BitString {
        let mut out = BitString::with_capacity(count);
        let mut left = count;
        while left > 0 {
            let take = left.min(64);
            out.push_uint(self.next_uint(take), take);
            left -= take;
        }
        out
    }

    pub fn next_bool(&mut self) -> bool {
        self.next_uint(1) == 1
    }

    /// Uniform value in `0..bound` by rejection on the minimal bit width.
    pub fn uniform_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "uniform_below(0)");
        if bound == 1 {
            return 0;
        }
        let width = 64 - (bound - 1).leading_zeros() as usize;
        loop {
            let candidate = self.next_uint(width);
            if candidate < bound {
                return candidate;
            }
        }
    }
}

/// Four sub-seeds: the first four 64-bit words of the default stream seeded with `master`.
pub fn derive_subseeds(master: u64) -> [u64; 4] {
    derive_subseeds_with(master, GeneratorId::default())
}

pub fn derive_subseeds_with(master: u64, generator: GeneratorId) -> [u64; 4] {
    let mut s = PadStream::new(master, generator);
    [s.next_u64(), s.next_u64(), s.next_u64(), s.next_u64()]
}

/// The pad-stream seed carried across sessions: `new = key_entry ⊕ old`, starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeedState {
    seed: u64,
}

impl SeedState {
    pub const HISTORY_RULE: &'static str = "chained-xor";

    pub fn new() -> Self {
        Self { seed: 0 }
    }

    pub fn from_value(seed: u64) -> Self {
        Self { seed }
    }

    pub fn value(&self) -> u64 {
        self.seed
    }

    /// The seed a session keyed by `key_entry` would use; does not mutate.
    pub fn chained(&self, key_entry: u64) -> u64 {
        key_entry ^ self.seed
    }

    pub fn advance(&mut self, key_entry: u64) {
        self.seed = self.chained(key_entry);
    }
}
