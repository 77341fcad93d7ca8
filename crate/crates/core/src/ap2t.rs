//! Tamper-evident variant of the pad-encapsulated protocol.
//!
//! A session's master seed is expanded into four sub-seeds. The frame is
//!
//! ```text
//! Y = perm_s4( (LRV ∥ keyword) ⊕ c1  ∥  parity(LRV ∥ keyword) ⊕ c2  ∥  c3 )
//! ```
//!
//! where `c1..c3` are pad streams seeded with the first three sub-seeds and
//! the parity is a `D`-dimensional grid code of minimum distance `D + 1`.
//! The trailing `c3` bits are watermarks; only the permutation hides where
//! they land. An in-flight edit succeeds only if it leaves every watermark
//! alone and turns the plaintext into another codeword, which bounds the
//! success probability by `(1 - v/t)^(D+1)`.
//!
//! Sessions keep the staged-seed rollback of [`crate::ap2`], so a tampered
//! frame costs one retry instead of desynchronizing the pair.

use serde::{Deserialize, Serialize};

use crate::ap2::{Encapsulation, PadTag, PadVerifier};
use crate::bits::{xor_bits, BitString};
use crate::error::{Error, Result};
use crate::padstream::{derive_subseeds_with, GeneratorId, PadStream};
use crate::types::{ProtocolId, ProtocolParams, SecretVector};

/// Upper limit on the frame length, to keep misconfigured layouts from allocating gigabytes.
pub const MAX_FRAME_BITS: usize = 1 << 24;

/// Smallest side `s` with `s^dims >= m`.
pub fn grid_side(m: usize, dims: usize) -> usize {
    assert!(dims >= 1, "grid needs at least one dimension");
    let covers = |s: usize| s.checked_pow(dims as u32).is_none_or(|cells| cells >= m);
    let mut side = (m.max(1) as f64).powf(1.0 / dims as f64).floor().max(1.0) as usize;
    while side > 1 && covers(side - 1) {
        side -= 1;
    }
    while !covers(side) {
        side += 1;
    }
    side
}

/// `round(log2(n·l))`, at least 1.
pub fn default_dims(n: usize, l: usize) -> usize {
    ((n * l) as f64).log2().round().max(1.0) as usize
}

/// Geometry of a tamper-evident frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LayoutSpec", into = "LayoutSpec")]
pub struct FrameLayout {
    m: usize,
    dims: usize,
    side: usize,
    q: usize,
    v: usize,
    t: usize,
}

/// Serialized form: only the free parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct LayoutSpec {
    m: usize,
    dims: usize,
    v: usize,
}

impl TryFrom<LayoutSpec> for FrameLayout {
    type Error = Error;

    fn try_from(spec: LayoutSpec) -> Result<Self> {
        FrameLayout::new(spec.m, spec.dims, spec.v)
    }
}

impl From<FrameLayout> for LayoutSpec {
    fn from(layout: FrameLayout) -> Self {
        LayoutSpec { m: layout.m, dims: layout.dims, v: layout.v }
    }
}

impl FrameLayout {
    pub fn new(m: usize, dims: usize, v: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidLayout("payload length m must be positive".into()));
        }
        if dims == 0 || dims > 32 {
            return Err(Error::InvalidLayout(format!("dims must be in 1..=32, got {dims}")));
        }
        let side = grid_side(m, dims);
        let q = side
            .checked_pow(dims as u32 - 1)
            .and_then(|lines| lines.checked_mul(dims))
            .filter(|&q| q <= MAX_FRAME_BITS)
            .ok_or_else(|| Error::InvalidLayout(format!("parity code for m={m}, dims={dims} is too large")))?;
        let t = m + q + v;
        if t > MAX_FRAME_BITS {
            return Err(Error::InvalidLayout(format!("frame of {t} bits exceeds {MAX_FRAME_BITS}")));
        }
        Ok(Self { m, dims, side, q, v, t })
    }

    /// Layout whose watermarks fill half the frame: `v = m + q`.
    pub fn half_watermarked(m: usize, dims: usize) -> Result<Self> {
        let probe = Self::new(m, dims, 0)?;
        Self::new(m, dims, probe.m + probe.q)
    }

    /// Layout for `params`, with `dims` defaulting to `round(log2(n·l))` and `v` to `m + q`.
    pub fn for_params(params: &ProtocolParams, dims: Option<usize>, v: Option<usize>) -> Result<Self> {
        let m = params.payload_bits();
        let dims = dims.unwrap_or_else(|| default_dims(params.n(), params.l()));
        match v {
            Some(v) => Self::new(m, dims, v),
            None => Self::half_watermarked(m, dims),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn alpha(&self) -> f64 {
        self.v as f64 / self.t as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityBound {
    pub d_min: usize,
    pub alpha: f64,
    pub p_a_bound: f64,
}

pub fn compute_security_bound(layout: &FrameLayout) -> SecurityBound {
    let d_min = layout.dims + 1;
    let alpha = layout.alpha();
    SecurityBound { d_min, alpha, p_a_bound: (1.0 - alpha).powi(d_min as i32) }
}

/// Parity bits of `payload` laid out on a `dims`-dimensional grid, zero padded.
///
/// Cell `k` has coordinate `d` equal to `(k / side^d) mod side`. Output holds,
/// for each dimension in turn, the xor of every line running along it; lines
/// are ordered by their remaining coordinates, lowest dimension fastest.
/// For `dims = 2` that is row parities followed by column parities.
pub fn parity_encode(payload: &BitString, dims: usize) -> BitString {
    let layout = FrameLayout::new(payload.len().max(1), dims, 0).expect("parity layout");
    let side = layout.side;
    let lines = layout.q / dims;
    let mut red = vec![false; layout.q];
    for k in payload.iter().enumerate().filter_map(|(k, bit)| bit.then_some(k)) {
        let mut stride = 1usize;
        for d in 0..dims {
            let lo = k % stride;
            let hi = k / (stride * side);
            red[d * lines + hi * stride + lo] ^= true;
            stride *= side;
        }
    }
    if payload.is_empty() {
        red.clear();
    }
    BitString::from_bools(red)
}

pub fn parity_verify(payload: &BitString, redundancy: &BitString, dims: usize) -> bool {
    !payload.is_empty() && parity_encode(payload, dims) == *redundancy
}

/// A bijection on `0..t`: input bit `i` goes to output position `mapping[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSpec {
    mapping: Vec<usize>,
}

impl PermutationSpec {
    pub fn identity(t: usize) -> Self {
        Self { mapping: (0..t).collect() }
    }

    /// Rejects anything that is not a bijection on `0..len`.
    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &target in &mapping {
            if target >= mapping.len() || std::mem::replace(&mut seen[target], true) {
                return Err(Error::InvalidLayout(format!("mapping is not a bijection at {target}")));
            }
        }
        Ok(Self { mapping })
    }

    pub fn size(&self) -> usize {
        self.mapping.len()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &target) in self.mapping.iter().enumerate() {
            inv[target] = i;
        }
        Self { mapping: inv }
    }

    pub fn apply(&self, bits: &BitString) -> BitString {
        assert_eq!(bits.len(), self.size(), "permutation size mismatch");
        let mut out = vec![false; bits.len()];
        for (bit, &target) in bits.iter().zip(&self.mapping) {
            out[target] = bit;
        }
        BitString::from_bools(out)
    }

    /// Undoes [`apply`](Self::apply).
    pub fn invert(&self, bits: &BitString) -> BitString {
        assert_eq!(bits.len(), self.size(), "permutation size mismatch");
        self.mapping.iter().map(|&target| bits.get(target)).collect()
    }
}

/// Fisher–Yates shuffle of the identity driven by the default generator.
pub fn permutation_from_seed(seed: u64, t: usize) -> PermutationSpec {
    permutation_from_seed_with(seed, t, GeneratorId::default())
}

pub fn permutation_from_seed_with(seed: u64, t: usize, generator: GeneratorId) -> PermutationSpec {
    let mut rng = PadStream::new(seed, generator);
    let mut mapping: Vec<usize> = (0..t).collect();
    for i in (1..t).rev() {
        let j = rng.uniform_below(i as u64 + 1) as usize;
        mapping.swap(i, j);
    }
    PermutationSpec { mapping }
}

/// The three pads and the permutation of one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePads {
    pub body: BitString,
    pub redundancy: BitString,
    pub marks: BitString,
    pub permutation: PermutationSpec,
}

impl FramePads {
    pub fn derive(master: u64, layout: &FrameLayout, generator: GeneratorId) -> Self {
        let [s1, s2, s3, s4] = derive_subseeds_with(master, generator);
        Self {
            body: PadStream::new(s1, generator).next_bits(layout.m),
            redundancy: PadStream::new(s2, generator).next_bits(layout.q),
            marks: PadStream::new(s3, generator).next_bits(layout.v),
            permutation: permutation_from_seed_with(s4, layout.t, generator),
        }
    }

    /// All-zero pads and the identity permutation.
    pub fn transparent(layout: &FrameLayout) -> Self {
        Self {
            body: BitString::zeros(layout.m),
            redundancy: BitString::zeros(layout.q),
            marks: BitString::zeros(layout.v),
            permutation: PermutationSpec::identity(layout.t),
        }
    }
}

/// Builds the frame for `plaintext` under explicit pads.
pub fn assemble_frame(plaintext: &BitString, layout: &FrameLayout, pads: &FramePads) -> Result<BitString> {
    if plaintext.len() != layout.m {
        return Err(Error::LengthMismatch { left: plaintext.len(), right: layout.m });
    }
    let mut frame = xor_bits(plaintext, &pads.body)?;
    frame.extend_from(&xor_bits(&parity_encode(plaintext, layout.dims), &pads.redundancy)?);
    frame.extend_from(&pads.marks);
    Ok(pads.permutation.apply(&frame))
}

/// Inverts [`assemble_frame`]; `None` on a length, watermark or parity failure.
pub fn disassemble_frame(frame: &BitString, layout: &FrameLayout, pads: &FramePads) -> Option<BitString> {
    if frame.len() != layout.t {
        return None;
    }
    let (m, q) = (layout.m, layout.q);
    let flat = pads.permutation.invert(frame);
    if flat.slice(m + q, layout.t) != pads.marks {
        return None;
    }
    let plaintext = xor_bits(&flat.slice(0, m), &pads.body).ok()?;
    let redundancy = xor_bits(&flat.slice(m, m + q), &pads.redundancy).ok()?;
    parity_verify(&plaintext, &redundancy, layout.dims).then_some(plaintext)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TamperEvidentFrame {
    layout: FrameLayout,
}

impl TamperEvidentFrame {
    pub fn new(layout: FrameLayout) -> Self {
        Self { layout }
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }
}

impl Encapsulation for TamperEvidentFrame {
    fn protocol(&self) -> ProtocolId {
        ProtocolId::Ap2t
    }

    fn frame_bits(&self, _params: &ProtocolParams) -> usize {
        self.layout.t
    }

    fn seal(&self, master: u64, plaintext: &BitString, generator: GeneratorId) -> BitString {
        let pads = FramePads::derive(master, &self.layout, generator);
        assemble_frame(plaintext, &self.layout, &pads).expect("plaintext matches layout")
    }

    fn open(&self, master: u64, frame: &BitString, params: &ProtocolParams, generator: GeneratorId) -> Option<BitString> {
        if self.layout.m != params.payload_bits() || frame.len() != self.layout.t {
            return None;
        }
        let pads = FramePads::derive(master, &self.layout, generator);
        disassemble_frame(frame, &self.layout, &pads)
    }
}

pub type Ap2tTag = PadTag<TamperEvidentFrame>;
pub type Ap2tVerifier = PadVerifier<TamperEvidentFrame>;

fn check_layout(params: &ProtocolParams, layout: &FrameLayout) -> Result<()> {
    if layout.m != params.payload_bits() {
        return Err(Error::InvalidLayout(format!(
            "layout carries {} payload bits, params need {}",
            layout.m,
            params.payload_bits()
        )));
    }
    Ok(())
}

impl Ap2tTag {
    pub fn ap2t(params: ProtocolParams, arv: SecretVector, layout: FrameLayout, generator: GeneratorId, rng: PadStream) -> Result<Self> {
        check_layout(&params, &layout)?;
        Self::new(params, arv, TamperEvidentFrame::new(layout), generator, rng)
    }
}

impl Ap2tVerifier {
    pub fn ap2t(params: ProtocolParams, arv: SecretVector, layout: FrameLayout, generator: GeneratorId) -> Result<Self> {
        check_layout(&params, &layout)?;
        Self::new(params, arv, TamperEvidentFrame::new(layout), generator)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::ap2::build_plaintext;
    use crate::session::{Tag, Verifier};
    use crate::types::Verdict;
    use crate::wire::KeyMessage;
    use proptest::prelude::*;

    /// Independent parity oracle: explicit coordinate tuples keyed in a map.
    fn oracle_parity(bits: &[bool], dims: usize) -> Vec<Vec<bool>> {
        let side = grid_side(bits.len(), dims);
        let mut per_dim: Vec<HashMap<Vec<usize>, bool>> = vec![HashMap::new(); dims];
        let cells = side.pow(dims as u32);
        for k in 0..cells {
            let mut coords = Vec::with_capacity(dims);
            let mut rest = k;
            for _ in 0..dims {
                coords.push(rest % side);
                rest /= side;
            }
            let bit = bits.get(k).copied().unwrap_or(false);
            for (d, lines) in per_dim.iter_mut().enumerate() {
                let mut key = coords.clone();
                key.remove(d);
                *lines.entry(key).or_insert(false) ^= bit;
            }
        }
        per_dim
            .into_iter()
            .map(|lines| {
                let mut keyed: Vec<_> = lines.into_iter().collect();
                // Lowest remaining coordinate varies fastest.
                keyed.sort_by(|a, b| a.0.iter().rev().cmp(b.0.iter().rev()));
                keyed.into_iter().map(|(_, p)| p).collect()
            })
            .collect()
    }

    fn exhaustive_distance(m: usize, dims: usize) -> usize {
        (1u64..1 << m)
            .map(|x| {
                let data = BitString::from_uint(x, m);
                data.count_ones() + parity_encode(&data, dims).count_ones()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn grid_side_is_minimal() {
        assert_eq!(grid_side(16, 2), 4);
        assert_eq!(grid_side(17, 2), 5);
        assert_eq!(grid_side(24, 4), 3);
        assert_eq!(grid_side(1, 3), 1);
        assert_eq!(grid_side(8, 1), 8);
        for m in 1..300 {
            for d in 1..6 {
                let s = grid_side(m, d);
                assert!(s.pow(d as u32) >= m);
                assert!(s == 1 || (s - 1).pow(d as u32) < m);
            }
        }
    }

    #[test]
    fn one_dimensional_parity() {
        let p = parity_encode(&BitString::parse_binary("1011").unwrap(), 1);
        assert_eq!(p.to_string(), "1");
    }

    #[test]
    fn two_by_two_grid_hand_computed() {
        let p = parity_encode(&BitString::parse_binary("1001").unwrap(), 2);
        assert_eq!(p.to_string(), "1111");
        let p = parity_encode(&BitString::parse_binary("1100").unwrap(), 2);
        // rows (1,0) and (0,0): row parities 0,0; columns (1,0),(1,0): 1,1
        assert_eq!(p.to_string(), "0011");
    }

    #[test]
    fn zero_payload_has_zero_parity() {
        for d in 1..5 {
            assert_eq!(parity_encode(&BitString::zeros(20), d).count_ones(), 0);
        }
    }

    #[test]
    fn parity_matches_coordinate_oracle() {
        let mut rng = PadStream::new(3, GeneratorId::default());
        for m in 1..40 {
            for d in 1..5 {
                let data = rng.next_bits(m);
                let expected: Vec<bool> = oracle_parity(data.as_bools(), d).concat();
                assert_eq!(parity_encode(&data, d).as_bools(), &expected[..], "m={m} d={d}");
            }
        }
    }

    #[test]
    fn parity_verify_rejects_single_flips_and_bad_lengths() {
        let data = BitString::parse_binary("1011001110001111").unwrap();
        let red = parity_encode(&data, 2);
        assert!(parity_verify(&data, &red, 2));
        for i in 0..data.len() {
            let mut bad = data.clone();
            bad.flip(i);
            assert!(!parity_verify(&bad, &red, 2));
        }
        assert!(!parity_verify(&data, &red.slice(0, 7), 2));
    }

    #[test]
    fn minimum_distance_is_dims_plus_one() {
        for m in 1..=16 {
            for dims in 1..=3 {
                assert_eq!(exhaustive_distance(m, dims), dims + 1, "m={m} dims={dims}");
            }
        }
    }

    #[test]
    fn layout_geometry() {
        let l = FrameLayout::new(16, 2, 0).unwrap();
        assert_eq!((l.side(), l.q(), l.t()), (4, 8, 24));
        let h = FrameLayout::half_watermarked(24, 4).unwrap();
        assert_eq!((h.side(), h.q(), h.v(), h.t()), (3, 108, 132, 264));
        assert_eq!(h.alpha(), 0.5);
        assert!(FrameLayout::new(0, 2, 0).is_err());
        assert!(FrameLayout::new(10, 0, 0).is_err());
        assert!(FrameLayout::new(1 << 20, 1, MAX_FRAME_BITS).is_err());
        let params = ProtocolParams::with_default_keyword(2, 8, 8).unwrap();
        assert_eq!(FrameLayout::for_params(&params, None, None).unwrap(), h);
    }

    #[test]
    fn layout_serde_recomputes_derived_fields() {
        let l = FrameLayout::half_watermarked(24, 4).unwrap();
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(json, r#"{"m":24,"dims":4,"v":132}"#);
        assert_eq!(serde_json::from_str::<FrameLayout>(&json).unwrap(), l);
        assert!(serde_json::from_str::<FrameLayout>(r#"{"m":0,"dims":4,"v":1}"#).is_err());
    }

    #[test]
    fn security_bound_values() {
        let params = ProtocolParams::with_default_keyword(2, 8, 8).unwrap();
        let b = compute_security_bound(&FrameLayout::for_params(&params, None, None).unwrap());
        assert_eq!(b.d_min, 5);
        assert!((b.p_a_bound - 1.0 / 32.0).abs() < 1e-15);
        let none = compute_security_bound(&FrameLayout::new(16, 2, 0).unwrap());
        assert_eq!(none.p_a_bound, 1.0);
        let mut last = 1.0;
        for dims in 1..8 {
            let b = compute_security_bound(&FrameLayout::half_watermarked(64, dims).unwrap());
            assert!(b.p_a_bound < last);
            last = b.p_a_bound;
        }
    }

    #[test]
    fn permutation_basics() {
        assert_eq!(permutation_from_seed(9, 1), PermutationSpec::identity(1));
        assert_eq!(permutation_from_seed(9, 50), permutation_from_seed(9, 50));
        let p = permutation_from_seed(77, 257);
        assert!(PermutationSpec::from_mapping(p.mapping().to_vec()).is_ok());
        let mut rng = PadStream::new(1, GeneratorId::default());
        for _ in 0..20 {
            let x = rng.next_bits(257);
            assert_eq!(p.invert(&p.apply(&x)), x);
            assert_eq!(p.inverse().apply(&x), p.invert(&x));
        }
        assert!(PermutationSpec::from_mapping(vec![0, 0]).is_err());
        assert!(PermutationSpec::from_mapping(vec![0, 2]).is_err());
    }

    #[test]
    fn permutation_positions_are_uniform() {
        let (t, seeds) = (8usize, 10_000u64);
        let mut counts = vec![[0u32; 8]; t];
        for seed in 0..seeds {
            for (i, &target) in permutation_from_seed(seed, t).mapping().iter().enumerate() {
                counts[i][target] += 1;
            }
        }
        let p = 1.0 / t as f64;
        let sigma = (seeds as f64 * p * (1.0 - p)).sqrt();
        let expected = seeds as f64 * p;
        let mut chi2 = 0.0;
        for row in &counts {
            for &c in row {
                assert!((c as f64 - expected).abs() <= 3.0 * sigma, "{counts:?}");
                chi2 += (c as f64 - expected).powi(2) / expected;
            }
        }
        // (t-1)^2 = 49 degrees of freedom; 99.9% quantile is about 85.4.
        assert!(chi2 < 85.4, "chi2 {chi2}");
    }

    #[test]
    fn transparent_pads_expose_the_layout() {
        let layout = FrameLayout::new(4, 2, 3).unwrap();
        let plaintext = BitString::parse_binary("1001").unwrap();
        let frame = assemble_frame(&plaintext, &layout, &FramePads::transparent(&layout)).unwrap();
        assert_eq!(frame.to_string(), "10011111000");
        assert_eq!(disassemble_frame(&frame, &layout, &FramePads::transparent(&layout)), Some(plaintext));
    }

    fn pair(n: usize, l: usize, kw: usize, seed: u64) -> (Ap2tTag, Ap2tVerifier) {
        let params = ProtocolParams::with_default_keyword(n, l, kw).unwrap();
        let layout = FrameLayout::for_params(&params, Some(2), None).unwrap();
        let mut init = PadStream::new(seed ^ 0x5A5A, GeneratorId::default());
        let arv = SecretVector::new(l, (0..n).map(|_| init.next_uint(l)).collect()).unwrap();
        let rng = PadStream::new(seed, GeneratorId::default());
        (
            Ap2tTag::ap2t(params.clone(), arv.clone(), layout, GeneratorId::default(), rng).unwrap(),
            Ap2tVerifier::ap2t(params, arv, layout, GeneratorId::default()).unwrap(),
        )
    }

    #[test]
    fn layout_must_match_params() {
        let params = ProtocolParams::with_default_keyword(2, 8, 8).unwrap();
        let arv = SecretVector::zeros(2, 8);
        let bad = FrameLayout::half_watermarked(23, 2).unwrap();
        assert!(Ap2tVerifier::ap2t(params, arv, bad, GeneratorId::default()).is_err());
    }

    #[test]
    fn honest_round_trip() {
        let (mut tag, mut ver) = pair(2, 8, 8, 5);
        let mut again = pair(2, 8, 8, 5).0;
        for _ in 0..100 {
            let msg = tag.begin_session().unwrap();
            assert_eq!(msg, again.begin_session().unwrap());
            assert_eq!(msg.payload.len(), ver.payload_bits());
            let v = ver.handle(&msg);
            assert_eq!(v, Verdict::Open);
            tag.complete_session(v).unwrap();
            again.complete_session(v).unwrap();
            assert_eq!(Tag::shared_state(&tag), Verifier::shared_state(&ver));
        }
    }

    #[test]
    fn single_flips_never_open_with_different_content() {
        let (mut tag, ver) = pair(2, 8, 8, 6);
        let msg = tag.begin_session().unwrap();
        let sent = tag.pending_plaintext().unwrap();
        let mut rng = PadStream::new(66, GeneratorId::default());
        for _ in 0..5_000 {
            let mut bad = msg.clone();
            bad.payload.flip(rng.uniform_below(msg.payload.len() as u64) as usize);
            if let Some(opened) = ver.inspect(&bad) {
                assert_eq!(opened, sent);
            }
        }
        for i in 0..msg.payload.len() {
            let mut bad = msg.clone();
            bad.payload.flip(i);
            assert_eq!(ver.inspect(&bad), None);
        }
        let short = KeyMessage::new(ProtocolId::Ap2t, 1, msg.payload.slice(0, 10));
        assert_eq!(ver.inspect(&short), None);
    }

    #[test]
    fn frame_of_other_protocol_is_rejected() {
        let (mut tag, mut ver) = pair(2, 8, 8, 7);
        let mut msg = tag.begin_session().unwrap();
        msg.protocol = ProtocolId::Ap2;
        assert_eq!(ver.handle(&msg), Verdict::DoNotOpen);
    }

    #[test]
    fn plaintext_helper_matches_tag() {
        let kw = BitString::parse_binary("1111").unwrap();
        assert_eq!(build_plaintext(&[1, 2], &kw, 2).to_string(), "01101111");
    }

    proptest! {
        #[test]
        fn frames_round_trip(m in 1usize..200, dims in 1usize..5, v in 0usize..64, master: u64) {
            let layout = FrameLayout::new(m, dims, v).unwrap();
            let pads = FramePads::derive(master, &layout, GeneratorId::default());
            let plaintext = PadStream::new(master ^ 1, GeneratorId::default()).next_bits(m);
            let frame = assemble_frame(&plaintext, &layout, &pads).unwrap();
            prop_assert_eq!(frame.len(), layout.t());
            prop_assert_eq!(disassemble_frame(&frame, &layout, &pads), Some(plaintext));
        }

        #[test]
        fn completeness(n in 2usize..6, l in 1usize..20, kw in 1usize..12, seed: u64) {
            let (mut tag, mut ver) = pair(n, l, kw, seed);
            for _ in 0..5 {
                let msg = tag.begin_session().unwrap();
                let v = ver.handle(&msg);
                prop_assert_eq!(v, Verdict::Open);
                tag.complete_session(v).unwrap();
            }
            prop_assert_eq!(Tag::shared_state(&tag), Verifier::shared_state(&ver));
        }
    }
}
