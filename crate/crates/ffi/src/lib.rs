//! C ABI for the proauth tag and verifier state machines.
//!
//! Tags and verifiers are opaque handles created in pairs by [`pa_pair_new`]
//! and released with [`pa_tag_free`] / [`pa_verifier_free`]. Messages cross
//! the boundary in their wire encoding. Every fallible call returns a
//! [`PaStatus`]; [`pa_last_error`] describes the latest failure on the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use proauth::ap2t::FrameLayout;
use proauth::harness::{load_configs, run_experiment, write_results, OutputFormat};
use proauth::refresh::RefreshPolicy;
use proauth::session::PairSpec;
use proauth::wire::{decode_key, decode_message, encode_key, encode_verdict, Message};
use proauth::{AnyTag, AnyVerifier, Error, GeneratorId, ProtocolId, ProtocolParams, Tag, Verdict, Verifier};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Session calls out of order, such as completing with nothing pending.
    State = 3,
    Decode = 4,
    /// The output buffer is too small; the required length was still written.
    BufferTooSmall = 5,
    Config = 6,
    Panic = 7,
}

/// Setup for [`pa_pair_new`]. Fill with [`pa_pair_config_default`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaPairConfig {
    /// Wire protocol id: 1, 2 or 3.
    pub protocol: u8,
    pub n: u32,
    pub l: u32,
    /// Unused by protocol 1.
    pub keyword_len: u32,
    /// Entries refreshed per session by protocol 1; 0 refreshes every entry.
    pub sparse_count: u32,
    pub k_private: u32,
    /// Parity dimensions for protocol 3; 0 picks round(log2(n*l)).
    pub dims: u32,
    /// Watermark bits for protocol 3; negative fills half the frame.
    pub watermark_bits: i64,
    /// 0 = xorshift64*, 1 = splitmix64.
    pub generator: u8,
}

pub struct PaTag {
    tag: AnyTag,
    /// Frame of a begun session that did not fit the caller's buffer.
    unsent: Option<Vec<u8>>,
}

pub struct PaVerifier {
    verifier: AnyVerifier,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::SessionPending | Error::NoPendingSession => PaStatus::State,
            Error::Truncated { .. }
            | Error::UnsupportedVersion(_)
            | Error::UnknownProtocol(_)
            | Error::MalformedFrame(_)
            | Error::InvalidBitString(_) => PaStatus::Decode,
            Error::Config(_)
            | Error::InvalidParams(_)
            | Error::InvalidLayout(_)
            | Error::UnknownGenerator(_)
            | Error::RefreshCount { .. } => PaStatus::Config,
            _ => PaStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PaStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PaStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(Failure(PaStatus::Panic, msg))
    });
    match outcome {
        Ok(()) => PaStatus::Ok,
        Err(Failure(status, msg)) => {
            let text = CString::new(msg.replace('\0', " ")).expect("nul bytes replaced");
            LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
            status
        }
    }
}

/// Copies `bytes` out, or reports the needed length when `buf` is short.
unsafe fn write_out(bytes: &[u8], buf: *mut u8, cap: usize, len_out: *mut usize) -> Result<(), Failure> {
    *len_out = bytes.len();
    if buf.is_null() || cap < bytes.len() {
        return Err(Failure(PaStatus::BufferTooSmall, format!("need {} bytes, have {cap}", bytes.len())));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    Ok(())
}

unsafe fn input<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if data.is_null() {
        return if len == 0 { Ok(&[]) } else { Err(null("input buffer")) };
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn pa_status_name(status: PaStatus) -> *const c_char {
    let name: &'static CStr = match status {
        PaStatus::Ok => c"ok",
        PaStatus::NullPointer => c"null pointer",
        PaStatus::InvalidArgument => c"invalid argument",
        PaStatus::State => c"session state",
        PaStatus::Decode => c"decode error",
        PaStatus::BufferTooSmall => c"buffer too small",
        PaStatus::Config => c"configuration error",
        PaStatus::Panic => c"internal panic",
    };
    name.as_ptr()
}

/// Message for the latest failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn pa_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `out` must be null or point to writable memory for one `PaPairConfig`.
#[no_mangle]
pub unsafe extern "C" fn pa_pair_config_default(out: *mut PaPairConfig) -> PaStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = PaPairConfig {
            protocol: ProtocolId::Ap1.wire_id(),
            n: 4,
            l: 32,
            keyword_len: 16,
            sparse_count: 0,
            k_private: 1,
            dims: 0,
            watermark_bits: -1,
            generator: 0,
        };
        Ok(())
    })
}

fn pair_spec(cfg: &PaPairConfig) -> Result<PairSpec, Failure> {
    let protocol = ProtocolId::from_wire_id(cfg.protocol).ok_or(Error::UnknownProtocol(cfg.protocol))?;
    let generator = match cfg.generator {
        0 => GeneratorId::XorShift64Star,
        1 => GeneratorId::SplitMix64,
        other => return Err(Error::UnknownGenerator(other.to_string()).into()),
    };
    let params = ProtocolParams::with_default_keyword(cfg.n as usize, cfg.l as usize, cfg.keyword_len as usize)?;
    let k_private = cfg.k_private.max(1) as usize;
    let refresh = match cfg.sparse_count {
        0 => RefreshPolicy { k_private, ..RefreshPolicy::dense() },
        r => RefreshPolicy::sparse(r as usize, k_private),
    };
    let layout = (protocol == ProtocolId::Ap2t)
        .then(|| {
            let dims = (cfg.dims > 0).then_some(cfg.dims as usize);
            let v = usize::try_from(cfg.watermark_bits).ok();
            FrameLayout::for_params(&params, dims, v)
        })
        .transpose()?;
    Ok(PairSpec { protocol, params, refresh, layout, generator })
}

/// Creates a synchronized tag and verifier.
///
/// # Safety
/// `cfg` must point to a valid `PaPairConfig`; `tag_out` and `verifier_out`
/// must point to writable handle slots.
#[no_mangle]
pub unsafe extern "C" fn pa_pair_new(
    cfg: *const PaPairConfig,
    vector_seed: u64,
    tag_seed: u64,
    tag_out: *mut *mut PaTag,
    verifier_out: *mut *mut PaVerifier,
) -> PaStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if tag_out.is_null() || verifier_out.is_null() {
            return Err(null("output handle"));
        }
        let (tag, verifier) = pair_spec(cfg)?.build(vector_seed, tag_seed)?;
        *tag_out = Box::into_raw(Box::new(PaTag { tag, unsent: None }));
        *verifier_out = Box::into_raw(Box::new(PaVerifier { verifier }));
        Ok(())
    })
}

/// # Safety
/// `tag` must be null or a handle from [`pa_pair_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pa_tag_free(tag: *mut PaTag) {
    if !tag.is_null() {
        drop(Box::from_raw(tag));
    }
}

/// # Safety
/// `verifier` must be null or a handle from [`pa_pair_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pa_verifier_free(verifier: *mut PaVerifier) {
    if !verifier.is_null() {
        drop(Box::from_raw(verifier));
    }
}

/// Starts a session and writes its key message frame.
///
/// On `PA_STATUS_BUFFER_TOO_SMALL` the session stays begun and the same frame
/// is returned by the next call.
///
/// # Safety
/// `tag` must be a live handle, `buf` null or writable for `cap` bytes, and
/// `len_out` writable.
#[no_mangle]
pub unsafe extern "C" fn pa_tag_begin(tag: *mut PaTag, buf: *mut u8, cap: usize, len_out: *mut usize) -> PaStatus {
    guard(|| {
        let handle = tag.as_mut().ok_or_else(|| null("tag"))?;
        if len_out.is_null() {
            return Err(null("len_out"));
        }
        let frame = match handle.unsent.take() {
            Some(frame) => frame,
            None => encode_key(&handle.tag.begin_session()?),
        };
        let result = write_out(&frame, buf, cap, len_out);
        if result.is_err() {
            handle.unsent = Some(frame);
        }
        result
    })
}

/// Applies the verifier's reply to the pending session.
///
/// # Safety
/// `tag` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pa_tag_complete(tag: *mut PaTag, open: bool) -> PaStatus {
    guard(|| {
        let handle = tag.as_mut().ok_or_else(|| null("tag"))?;
        handle.unsent = None;
        let verdict = if open { Verdict::Open } else { Verdict::DoNotOpen };
        Ok(handle.tag.complete_session(verdict)?)
    })
}

/// # Safety
/// `tag` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pa_tag_session_counter(tag: *const PaTag, out: *mut u32) -> PaStatus {
    guard(|| {
        let handle = tag.as_ref().ok_or_else(|| null("tag"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = Tag::shared_state(&handle.tag).session_counter;
        Ok(())
    })
}

/// Judges a key message frame. A frame that fails to decode is answered
/// with DoNotOpen and `PA_STATUS_DECODE`.
///
/// # Safety
/// `verifier` must be a live handle, `frame` readable for `len` bytes, and
/// `open_out` writable.
#[no_mangle]
pub unsafe extern "C" fn pa_verifier_handle(
    verifier: *mut PaVerifier,
    frame: *const u8,
    len: usize,
    open_out: *mut bool,
) -> PaStatus {
    guard(|| {
        let handle = verifier.as_mut().ok_or_else(|| null("verifier"))?;
        let open_out = open_out.as_mut().ok_or_else(|| null("open_out"))?;
        *open_out = false;
        let msg = decode_key(input(frame, len)?)?;
        *open_out = handle.verifier.handle(&msg).is_open();
        Ok(())
    })
}

/// Writes a verdict frame.
///
/// # Safety
/// `buf` must be null or writable for `cap` bytes; `len_out` writable.
#[no_mangle]
pub unsafe extern "C" fn pa_verdict_encode(open: bool, buf: *mut u8, cap: usize, len_out: *mut usize) -> PaStatus {
    guard(|| {
        if len_out.is_null() {
            return Err(null("len_out"));
        }
        let verdict = if open { Verdict::Open } else { Verdict::DoNotOpen };
        write_out(&encode_verdict(verdict), buf, cap, len_out)
    })
}

/// # Safety
/// `frame` must be readable for `len` bytes and `open_out` writable.
#[no_mangle]
pub unsafe extern "C" fn pa_verdict_decode(frame: *const u8, len: usize, open_out: *mut bool) -> PaStatus {
    guard(|| {
        let open_out = open_out.as_mut().ok_or_else(|| null("open_out"))?;
        match decode_message(input(frame, len)?)? {
            Message::Verdict(v) => {
                *open_out = v.verdict.is_open();
                Ok(())
            }
            Message::Key(_) => Err(Error::MalformedFrame("expected a verdict, got a key message".into()).into()),
        }
    })
}

/// Whether tag and verifier hold the same vector, counter and seed.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pa_pair_in_sync(tag: *const PaTag, verifier: *const PaVerifier, out: *mut bool) -> PaStatus {
    guard(|| {
        let tag = tag.as_ref().ok_or_else(|| null("tag"))?;
        let verifier = verifier.as_ref().ok_or_else(|| null("verifier"))?;
        *out.as_mut().ok_or_else(|| null("out"))? =
            Tag::shared_state(&tag.tag) == Verifier::shared_state(&verifier.verifier);
        Ok(())
    })
}

/// Runs the experiments of a JSON config and returns the CSV report.
/// Free `*csv_out` with [`pa_string_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `csv_out` and `all_pass` writable.
#[no_mangle]
pub unsafe extern "C" fn pa_run_experiments(config_json: *const c_char, csv_out: *mut *mut c_char, all_pass: *mut bool) -> PaStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        let csv_out = csv_out.as_mut().ok_or_else(|| null("csv_out"))?;
        let all_pass = all_pass.as_mut().ok_or_else(|| null("all_pass"))?;
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| Failure(PaStatus::InvalidArgument, format!("config is not UTF-8: {e}")))?;
        let results = load_configs(text)?.iter().map(run_experiment).collect::<Result<Vec<_>, _>>()?;
        let mut csv = Vec::new();
        write_results(&results, OutputFormat::Csv, &mut csv).expect("writing to memory");
        *all_pass = results.iter().all(|r| r.pass);
        *csv_out = CString::new(csv).expect("CSV has no NUL bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
