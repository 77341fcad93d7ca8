//! Proactive xor-refresh authentication protocols for RFID-style tags.
//!
//! Three protocols share one accumulated secret vector per tag/verifier pair:
//!
//! * [`ap1`]: the key entry is sent in the clear with fresh refresh values.
//! * [`ap2`]: the same payload plus a keyword, hidden under a chained pad stream.
//! * [`ap2t`]: a tamper-evident frame with parity, watermarks and a permutation.
//!
//! [`refresh`] covers sparse refresh and schedule auditing, [`channel`] the
//! adversarial session simulator, and [`harness`] the Monte Carlo experiments
//! behind the `auth-sim` binary.

pub mod ap1;
pub mod ap2;
pub mod ap2t;
pub mod bits;
pub mod channel;
pub mod error;
pub mod harness;
pub mod padstream;
pub mod refresh;
pub mod session;
pub mod types;
pub mod wire;

pub use bits::BitString;
pub use error::{Error, Result};
pub use padstream::{GeneratorId, PadStream, SeedState};
pub use session::{AnyTag, AnyVerifier, SharedState, Tag, Verifier};
pub use types::{ProtocolId, ProtocolParams, RefreshVector, SecretVector, Verdict};
pub use wire::{KeyMessage, Message, VerdictMessage};
