//! Proactive information-theoretic protocol.
//!
//! Tag and verifier share an accumulated vector of `n` entries. Session `i`
//! uses entry `n - ((i-1) mod n)` as the key; the tag sends it in the clear
//! together with fresh refresh values. On `Open` both sides zero the used
//! entry and xor the refresh values into the vector, so one unobserved
//! session makes every entry unknown to an eavesdropper again.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::padstream::PadStream;
use crate::refresh::{apply_sparse_refresh, choose_refresh_set, RefreshMode, RefreshPolicy};
use crate::session::{SharedState, Tag, Verifier};
use crate::types::{ProtocolId, RefreshVector, SecretVector, Verdict};
use crate::wire::KeyMessage;

/// Checkpoint format version; the byte precedes a JSON body.
pub const CHECKPOINT_VERSION: u8 = 0x01;

/// Key entry for session `i`: `n - ((i-1) mod n)`, always in `1..=n`.
pub fn key_entry_index(n: usize, i: u32) -> usize {
    assert!(n >= 1 && i >= 1, "key_entry_index needs n >= 1 and i >= 1");
    n - ((i as usize - 1) % n)
}

/// Zeroes `keyentry` and xors every entry with the dense refresh vector.
pub fn updating_procedure(arv: &SecretVector, keyentry: usize, lrv: &RefreshVector) -> Result<SecretVector> {
    let RefreshVector::Dense(values) = lrv else {
        return Err(Error::SparseRefresh);
    };
    if values.len() != arv.len() {
        return Err(Error::RefreshLength { expected: arv.len(), got: values.len() });
    }
    let mut out = arv.clone();
    out.set(keyentry, 0)?;
    for (entry, &v) in out.entries_mut().iter_mut().zip(values) {
        *entry ^= v;
    }
    if let Some(&value) = out.as_slice().iter().find(|&&v| v & !crate::types::mask(arv.width()) != 0) {
        return Err(Error::ValueTooWide { value, width: arv.width() });
    }
    Ok(out)
}

/// Applies whichever refresh form `lrv` carries.
pub fn apply_refresh(arv: &SecretVector, keyentry: usize, lrv: &RefreshVector) -> Result<SecretVector> {
    match lrv {
        RefreshVector::Dense(_) => updating_procedure(arv, keyentry, lrv),
        RefreshVector::Sparse(_) => apply_sparse_refresh(arv, keyentry, lrv),
    }
}

/// Bits used for one index of a sparse refresh pair.
pub fn sparse_index_bits(n: usize) -> usize {
    (usize::BITS - (n.max(2) - 1).leading_zeros()) as usize
}

/// Payload length in bits for a given `(n, l, policy)`.
pub fn ap1_payload_bits(n: usize, l: usize, policy: &RefreshPolicy) -> usize {
    match policy.mode {
        RefreshMode::Dense => l + n * l,
        RefreshMode::SparseRandom => l + policy.per_session_count * (sparse_index_bits(n) + l),
    }
}

/// `X ∥ LRV`: the key value, then either `n` dense values or `(index-1, value)` pairs.
pub fn encode_ap1_payload(key: u64, lrv: &RefreshVector, n: usize, l: usize) -> BitString {
    let mut out = BitString::from_uint(key, l);
    match lrv {
        RefreshVector::Dense(values) => values.iter().for_each(|&v| out.push_uint(v, l)),
        RefreshVector::Sparse(pairs) => {
            let w = sparse_index_bits(n);
            for &(idx, v) in pairs {
                out.push_uint(idx as u64 - 1, w);
                out.push_uint(v, l);
            }
        }
    }
    out
}

/// Inverse of [`encode_ap1_payload`] for a known policy.
pub fn parse_ap1_payload(payload: &BitString, n: usize, l: usize, policy: &RefreshPolicy) -> Result<(u64, RefreshVector)> {
    let expected = ap1_payload_bits(n, l, policy);
    if payload.len() != expected {
        return Err(Error::MalformedFrame(format!("AP1 payload has {} bits, expected {expected}", payload.len())));
    }
    let key = payload.read_uint(0, l);
    let lrv = match policy.mode {
        RefreshMode::Dense => RefreshVector::Dense((0..n).map(|j| payload.read_uint(l + j * l, l)).collect()),
        RefreshMode::SparseRandom => {
            let w = sparse_index_bits(n);
            let pairs = (0..policy.per_session_count)
                .map(|p| {
                    let at = l + p * (w + l);
                    (payload.read_uint(at, w) as usize + 1, payload.read_uint(at + w, l))
                })
                .collect();
            RefreshVector::sparse(n, pairs)?
        }
    };
    Ok((key, lrv))
}

/// Draws a fresh refresh vector under `policy`.
pub fn draw_refresh(rng: &mut PadStream, n: usize, l: usize, policy: &RefreshPolicy) -> Result<RefreshVector> {
    Ok(match policy.mode {
        RefreshMode::Dense => RefreshVector::Dense((0..n).map(|_| rng.next_uint(l)).collect()),
        RefreshMode::SparseRandom => {
            let set = choose_refresh_set(rng, n, policy.per_session_count)?;
            RefreshVector::Sparse(set.into_iter().map(|idx| (idx, rng.next_uint(l))).collect())
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ap1Tag {
    arv: SecretVector,
    i: u32,
    policy: RefreshPolicy,
    pending: Option<RefreshVector>,
    rng: PadStream,
}

impl Ap1Tag {
    pub fn new(arv: SecretVector, policy: RefreshPolicy, rng: PadStream) -> Result<Self> {
        check_setup(&arv, &policy)?;
        Ok(Self { arv, i: 1, policy, pending: None, rng })
    }

    pub fn arv(&self) -> &SecretVector {
        &self.arv
    }

    pub fn session_counter(&self) -> u32 {
        self.i
    }

    pub fn policy(&self) -> &RefreshPolicy {
        &self.policy
    }

    pub fn pending(&self) -> Option<&RefreshVector> {
        self.pending.as_ref()
    }

    pub fn to_checkpoint(&self) -> Vec<u8> {
        checkpoint_bytes(self)
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self> {
        let tag: Self = from_checkpoint_bytes(bytes)?;
        check_setup(&tag.arv, &tag.policy)?;
        Ok(tag)
    }
}

impl Tag for Ap1Tag {
    fn protocol(&self) -> ProtocolId {
        ProtocolId::Ap1
    }

    fn begin_session(&mut self) -> Result<KeyMessage> {
        if self.pending.is_some() {
            return Err(Error::SessionPending);
        }
        let (n, l) = (self.arv.len(), self.arv.width());
        let keyentry = key_entry_index(n, self.i);
        let lrv = draw_refresh(&mut self.rng, n, l, &self.policy)?;
        let payload = encode_ap1_payload(self.arv.entry(keyentry), &lrv, n, l);
        self.pending = Some(lrv);
        Ok(KeyMessage::new(ProtocolId::Ap1, self.i, payload))
    }

    fn complete_session(&mut self, verdict: Verdict) -> Result<()> {
        let lrv = self.pending.take().ok_or(Error::NoPendingSession)?;
        if verdict.is_open() {
            let keyentry = key_entry_index(self.arv.len(), self.i);
            self.arv = apply_refresh(&self.arv, keyentry, &lrv)?;
            self.i = self.i.wrapping_add(1).max(1);
        }
        Ok(())
    }

    fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    fn shared_state(&self) -> SharedState {
        SharedState { arv: self.arv.clone(), session_counter: self.i, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ap1Verifier {
    arv: SecretVector,
    i: u32,
    policy: RefreshPolicy,
}

impl Ap1Verifier {
    pub fn new(arv: SecretVector, policy: RefreshPolicy) -> Result<Self> {
        check_setup(&arv, &policy)?;
        Ok(Self { arv, i: 1, policy })
    }

    pub fn arv(&self) -> &SecretVector {
        &self.arv
    }

    pub fn session_counter(&self) -> u32 {
        self.i
    }

    pub fn policy(&self) -> &RefreshPolicy {
        &self.policy
    }

    /// Key entry index expected in the next session.
    pub fn current_key_entry(&self) -> usize {
        key_entry_index(self.arv.len(), self.i)
    }

    pub fn to_checkpoint(&self) -> Vec<u8> {
        checkpoint_bytes(self)
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self> {
        let v: Self = from_checkpoint_bytes(bytes)?;
        check_setup(&v.arv, &v.policy)?;
        Ok(v)
    }

    fn try_accept(&self, msg: &KeyMessage) -> Option<SecretVector> {
        if msg.protocol != ProtocolId::Ap1 {
            return None;
        }
        let (n, l) = (self.arv.len(), self.arv.width());
        let (key, lrv) = parse_ap1_payload(&msg.payload, n, l, &self.policy).ok()?;
        let keyentry = self.current_key_entry();
        if key != self.arv.entry(keyentry) {
            return None;
        }
        apply_refresh(&self.arv, keyentry, &lrv).ok()
    }
}

impl Verifier for Ap1Verifier {
    fn protocol(&self) -> ProtocolId {
        ProtocolId::Ap1
    }

    fn handle(&mut self, msg: &KeyMessage) -> Verdict {
        match self.try_accept(msg) {
            Some(next) => {
                self.arv = next;
                self.i = self.i.wrapping_add(1).max(1);
                Verdict::Open
            }
            None => Verdict::DoNotOpen,
        }
    }

    fn shared_state(&self) -> SharedState {
        SharedState { arv: self.arv.clone(), session_counter: self.i, seed: None }
    }

    fn payload_bits(&self) -> usize {
        ap1_payload_bits(self.arv.len(), self.arv.width(), &self.policy)
    }
}

fn check_setup(arv: &SecretVector, policy: &RefreshPolicy) -> Result<()> {
    if arv.len() < 2 {
        return Err(Error::InvalidParams(format!("n must be at least 2, got {}", arv.len())));
    }
    // Checkpoints deserialize without the checked constructor.
    SecretVector::new(arv.width(), arv.as_slice().to_vec())?;
    policy.validate(arv.len())
}

fn checkpoint_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = vec![CHECKPOINT_VERSION];
    out.extend(serde_json::to_vec(value).expect("checkpoint state serializes"));
    out
}

fn from_checkpoint_bytes<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T> {
    match bytes.split_first() {
        Some((&CHECKPOINT_VERSION, body)) => {
            serde_json::from_slice(body).map_err(|e| Error::MalformedFrame(format!("checkpoint: {e}")))
        }
        Some((&v, _)) => Err(Error::UnsupportedVersion(v)),
        None => Err(Error::Truncated { needed: 1, got: 0 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padstream::GeneratorId;
    use crate::wire::{decode_key, encode_key};
    use proptest::prelude::*;

    fn sv(l: usize, entries: &[u64]) -> SecretVector {
        SecretVector::new(l, entries.to_vec()).unwrap()
    }

    fn rng(seed: u64) -> PadStream {
        PadStream::new(seed, GeneratorId::default())
    }

    #[test]
    fn key_entry_schedule() {
        assert_eq!(key_entry_index(4, 1), 4);
        assert_eq!(key_entry_index(4, 2), 3);
        assert_eq!(key_entry_index(4, 4), 1);
        assert_eq!(key_entry_index(4, 5), 4);
        for i in 1..100 {
            assert!((1..=7).contains(&key_entry_index(7, i)));
        }
    }

    #[test]
    fn updating_procedure_examples() {
        let arv = sv(8, &[5, 7]);
        let zero = RefreshVector::dense(vec![0, 0]);
        assert_eq!(updating_procedure(&arv, 2, &zero).unwrap().as_slice(), &[5, 0]);
        let lrv = RefreshVector::dense(vec![3, 4]);
        assert_eq!(updating_procedure(&arv, 2, &lrv).unwrap().as_slice(), &[6, 4]);
        let twice = updating_procedure(&updating_procedure(&arv, 2, &lrv).unwrap(), 2, &lrv).unwrap();
        assert_eq!(twice.as_slice(), &[5, 4]);
        let sparse = RefreshVector::sparse(2, vec![(1, 1)]).unwrap();
        assert_eq!(updating_procedure(&arv, 2, &sparse), Err(Error::SparseRefresh));
        assert!(updating_procedure(&arv, 2, &RefreshVector::dense(vec![1])).is_err());
    }

    /// Tag whose first LRV draw from `seed` is recorded by replaying the stream.
    fn first_lrv(seed: u64, n: usize, l: usize) -> Vec<u64> {
        let mut r = rng(seed);
        (0..n).map(|_| r.next_uint(l)).collect()
    }

    #[test]
    fn begin_session_hand_trace() {
        let lrv = first_lrv(11, 2, 4);
        let mut tag = Ap1Tag::new(sv(4, &[0xA, 0xB]), RefreshPolicy::dense(), rng(11)).unwrap();
        let msg = tag.begin_session().unwrap();
        assert_eq!(msg.session_index, 1);
        assert_eq!(msg.payload.len(), 12);
        assert_eq!(msg.payload.read_uint(0, 4), 0xB);
        assert_eq!(msg.payload.read_uint(4, 4), lrv[0]);
        assert_eq!(msg.payload.read_uint(8, 4), lrv[1]);
        assert_eq!(tag.arv().as_slice(), &[0xA, 0xB]);
        assert_eq!(tag.begin_session(), Err(Error::SessionPending));

        tag.complete_session(Verdict::Open).unwrap();
        assert_eq!(tag.arv().as_slice(), &[0xA ^ lrv[0], lrv[1]]);
        assert_eq!(tag.session_counter(), 2);
        assert_eq!(tag.complete_session(Verdict::Open), Err(Error::NoPendingSession));
    }

    #[test]
    fn fixed_lrv_trace_matches_hand_computation() {
        // ARV=(0xA,0xB), keyentry 2, LRV=(0x1,0x2) -> (0xA^0x1, 0x0^0x2) = (0xB, 0x2).
        let out = updating_procedure(&sv(4, &[0xA, 0xB]), 2, &RefreshVector::dense(vec![1, 2])).unwrap();
        assert_eq!(out.as_slice(), &[0xB, 0x2]);
        let mut v = Ap1Verifier::new(sv(4, &[0xA, 0xB]), RefreshPolicy::dense()).unwrap();
        let payload = encode_ap1_payload(0xB, &RefreshVector::dense(vec![1, 2]), 2, 4);
        assert_eq!(v.handle(&KeyMessage::new(ProtocolId::Ap1, 1, payload)), Verdict::Open);
        assert_eq!(v.arv().as_slice(), &[0xB, 0x2]);
    }

    #[test]
    fn same_state_same_message() {
        let mk = || Ap1Tag::new(sv(8, &[1, 2, 3]), RefreshPolicy::dense(), rng(5)).unwrap();
        assert_eq!(mk().begin_session().unwrap(), mk().begin_session().unwrap());
    }

    #[test]
    fn reject_keeps_key_state_and_retry_draws_fresh_lrv() {
        let mut tag = Ap1Tag::new(sv(8, &[1, 2, 3]), RefreshPolicy::dense(), rng(5)).unwrap();
        let before = Tag::shared_state(&tag);
        let first = tag.begin_session().unwrap();
        tag.complete_session(Verdict::DoNotOpen).unwrap();
        assert_eq!(Tag::shared_state(&tag), before);
        assert!(!tag.has_pending());
        let retry = tag.begin_session().unwrap();
        assert_eq!(retry.session_index, first.session_index);
        assert_eq!(retry.payload.slice(0, 8), first.payload.slice(0, 8));
        assert_ne!(retry.payload, first.payload);
    }

    #[test]
    fn verifier_rejects_wrong_key_and_malformed() {
        let arv = sv(8, &[10, 20, 30]);
        let mut tag = Ap1Tag::new(arv.clone(), RefreshPolicy::dense(), rng(3)).unwrap();
        let mut ver = Ap1Verifier::new(arv, RefreshPolicy::dense()).unwrap();
        let msg = tag.begin_session().unwrap();
        let snapshot = ver.clone();

        let mut flipped = msg.clone();
        flipped.payload.flip(3);
        assert_eq!(ver.handle(&flipped), Verdict::DoNotOpen);
        assert_eq!(ver, snapshot);

        let mut short = msg.clone();
        short.payload = short.payload.slice(0, 20);
        assert_eq!(ver.handle(&short), Verdict::DoNotOpen);
        let mut other = msg.clone();
        other.protocol = ProtocolId::Ap2;
        assert_eq!(ver.handle(&other), Verdict::DoNotOpen);
        assert_eq!(ver, snapshot);

        assert_eq!(ver.handle(&msg), Verdict::Open);
        tag.complete_session(Verdict::Open).unwrap();
        assert_eq!(Tag::shared_state(&tag), Verifier::shared_state(&ver));
    }

    #[test]
    fn random_key_accept_rate_is_two_to_minus_l() {
        // l=16: accept rate of uniformly random X over 10^6 trials within 3σ of 2^-16.
        let (l, trials) = (16usize, 1_000_000u32);
        let mut ver = Ap1Verifier::new(sv(l, &[0x1234, 0xBEEF]), RefreshPolicy::dense()).unwrap();
        let mut adv = rng(0xACE);
        let mut accepts = 0u32;
        for _ in 0..trials {
            let payload = adv.next_bits(3 * l);
            let mut probe = ver.clone();
            if probe.handle(&KeyMessage::new(ProtocolId::Ap1, 1, payload)) == Verdict::Open {
                accepts += 1;
            }
        }
        let p = 2f64.powi(-16);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let rate = accepts as f64 / trials as f64;
        assert!((rate - p).abs() <= 3.0 * sigma, "rate {rate}, p {p}, sigma {sigma}");
        // keep the verifier used
        assert_eq!(ver.handle(&KeyMessage::new(ProtocolId::Ap1, 1, BitString::new())), Verdict::DoNotOpen);
    }

    #[test]
    fn sparse_payload_round_trips() {
        let policy = RefreshPolicy::sparse(3, 1);
        let lrv = RefreshVector::sparse(6, vec![(1, 9), (4, 0), (6, 255)]).unwrap();
        let payload = encode_ap1_payload(77, &lrv, 6, 8);
        assert_eq!(payload.len(), ap1_payload_bits(6, 8, &policy));
        assert_eq!(parse_ap1_payload(&payload, 6, 8, &policy).unwrap(), (77, lrv));
        assert_eq!(sparse_index_bits(6), 3);
        assert_eq!(sparse_index_bits(8), 3);
        assert_eq!(sparse_index_bits(9), 4);
        assert_eq!(sparse_index_bits(2), 1);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut tag = Ap1Tag::new(sv(8, &[1, 2, 3]), RefreshPolicy::dense(), rng(5)).unwrap();
        tag.begin_session().unwrap();
        let restored = Ap1Tag::from_checkpoint(&tag.to_checkpoint()).unwrap();
        assert_eq!(restored, tag);
        let ver = Ap1Verifier::new(sv(8, &[1, 2, 3]), RefreshPolicy::dense()).unwrap();
        assert_eq!(Ap1Verifier::from_checkpoint(&ver.to_checkpoint()).unwrap(), ver);
        let mut bad = ver.to_checkpoint();
        bad[0] = 9;
        assert_eq!(Ap1Verifier::from_checkpoint(&bad), Err(Error::UnsupportedVersion(9)));
    }

    fn run_pair(n: usize, l: usize, policy: RefreshPolicy, seed: u64, sessions: usize) -> std::result::Result<(), TestCaseError> {
        let mut init = rng(seed ^ 0x5555);
        let arv = SecretVector::new(l, (0..n).map(|_| init.next_uint(l)).collect()).unwrap();
        let mut tag = Ap1Tag::new(arv.clone(), policy, rng(seed)).unwrap();
        let mut ver = Ap1Verifier::new(arv, policy).unwrap();
        for _ in 0..sessions {
            let msg = tag.begin_session().unwrap();
            let bytes = encode_key(&msg);
            let verdict = ver.handle(&decode_key(&bytes).unwrap());
            prop_assert_eq!(verdict, Verdict::Open);
            tag.complete_session(verdict).unwrap();
            prop_assert_eq!(Tag::shared_state(&tag), Verifier::shared_state(&ver));
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn honest_pairs_stay_synchronized(n in 2usize..20, l in 1usize..=64, seed: u64, sessions in 1usize..60) {
            run_pair(n, l, RefreshPolicy::dense(), seed, sessions)?;
        }

        #[test]
        fn sparse_variant_stays_synchronized(n in 2usize..40, l in 1usize..=64, seed: u64, sessions in 1usize..60) {
            run_pair(n, l, RefreshPolicy::sparse_default(n, 1), seed, sessions)?;
        }
    }
}
