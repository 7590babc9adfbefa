//! C ABI for censorlab.
//!
//! Every fallible function returns a [`CensorlabStatus`]; on failure a
//! message is available from [`censorlab_last_error`] on the same thread.
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `_free` function. Strings returned to the caller are
//! NUL-terminated UTF-8 and released with [`censorlab_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use censorlab::analyzer::{self, BandClass, RatioFlag};
use censorlab::corpus::{self, Encoding};
use censorlab::engine::{self, EngineProfile, ParsedResponse};
use censorlab::store::{QueryRecord, RunManifest, RunStore};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Unmappable = 4,
    ZeroObservations = 5,
    NotFound = 6,
    Io = 7,
    Parse = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorlabEncoding {
    Utf8 = 0,
    Gb18030 = 1,
    Gb2312 = 2,
}

impl From<CensorlabEncoding> for Encoding {
    fn from(e: CensorlabEncoding) -> Self {
        match e {
            CensorlabEncoding::Utf8 => Encoding::Utf8,
            CensorlabEncoding::Gb18030 => Encoding::Gb18030,
            CensorlabEncoding::Gb2312 => Encoding::Gb2312,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorlabBand {
    LowTail = 0,
    Unremarkable = 1,
    HighTail = 2,
}

pub const CENSORLAB_FLAG_ZERO_NUMERATOR: u32 = 1;
pub const CENSORLAB_FLAG_ZERO_DENOMINATOR: u32 = 2;
pub const CENSORLAB_FLAG_MISSING_DATA: u32 = 4;

/// A hit ratio; `ratio` is meaningful only when `has_ratio` is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensorlabRatio {
    pub has_ratio: bool,
    pub ratio: f64,
    /// Bitwise OR of the `CENSORLAB_FLAG_*` constants.
    pub flags: u32,
}

/// An engine profile.
pub struct CensorlabProfile(EngineProfile);

/// One parsed result page.
pub struct CensorlabParsed(ParsedResponse);

/// A stored run: manifest plus records.
pub struct CensorlabRun {
    manifest: RunManifest,
    records: Vec<QueryRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: CensorlabStatus, msg: impl Into<String>) -> CensorlabStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> CensorlabStatus) -> CensorlabStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(CensorlabStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, CensorlabStatus> {
    if p.is_null() {
        return Err(fail(
            CensorlabStatus::NullPointer,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CensorlabStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn to_c_string(s: &str) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

macro_rules! check_out {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(CensorlabStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn censorlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn censorlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Frees a byte buffer returned by [`censorlab_transcode`].
#[no_mangle]
pub unsafe extern "C" fn censorlab_bytes_free(bytes: *mut u8, len: usize) {
    if !bytes.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(bytes, len)));
    }
}

/// Encodes NFC-normalized `text` in `encoding`. Fails with `Unmappable` when
/// a character has no representation.
#[no_mangle]
pub unsafe extern "C" fn censorlab_transcode(
    text: *const c_char,
    encoding: CensorlabEncoding,
    out_bytes: *mut *mut u8,
    out_len: *mut usize,
) -> CensorlabStatus {
    guard(|| {
        check_out!(out_bytes, out_len);
        let text = try_status!(str_arg(text, "text"));
        match corpus::transcode(text, encoding.into()) {
            Ok(bytes) => {
                let boxed = bytes.into_boxed_slice();
                *out_len = boxed.len();
                *out_bytes = Box::into_raw(boxed) as *mut u8;
                CensorlabStatus::Ok
            }
            Err(e @ corpus::CorpusError::UnmappableCharacter { .. }) => {
                fail(CensorlabStatus::Unmappable, e.to_string())
            }
            Err(e) => fail(CensorlabStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Looks up a built-in profile by engine id, e.g. `"baidu.com"`.
#[no_mangle]
pub unsafe extern "C" fn censorlab_profile_builtin(
    name: *const c_char,
    out: *mut *mut CensorlabProfile,
) -> CensorlabStatus {
    guard(|| {
        check_out!(out);
        let name = try_status!(str_arg(name, "name"));
        match EngineProfile::builtin().remove(name) {
            Some(p) => {
                *out = Box::into_raw(Box::new(CensorlabProfile(p)));
                CensorlabStatus::Ok
            }
            None => fail(
                CensorlabStatus::NotFound,
                format!("no built-in profile {name:?}"),
            ),
        }
    })
}

/// Loads a profile from a TOML file.
#[no_mangle]
pub unsafe extern "C" fn censorlab_profile_load(
    path: *const c_char,
    out: *mut *mut CensorlabProfile,
) -> CensorlabStatus {
    guard(|| {
        check_out!(out);
        let path = try_status!(str_arg(path, "path"));
        match EngineProfile::load(Path::new(path)) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(CensorlabProfile(p)));
                CensorlabStatus::Ok
            }
            Err(e) => fail(CensorlabStatus::Parse, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn censorlab_profile_free(profile: *mut CensorlabProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Parses a raw result page fetched with `profile`. `page` is 1-based.
#[no_mangle]
pub unsafe extern "C" fn censorlab_parse_response(
    profile: *const CensorlabProfile,
    body: *const u8,
    len: usize,
    page: u32,
    out: *mut *mut CensorlabParsed,
) -> CensorlabStatus {
    guard(|| {
        check_out!(profile, out);
        if body.is_null() && len > 0 {
            return fail(CensorlabStatus::NullPointer, "body is null");
        }
        let bytes = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(body, len)
        };
        match engine::parse_response(&(*profile).0, bytes, page) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(CensorlabParsed(p)));
                CensorlabStatus::Ok
            }
            Err(e) => fail(CensorlabStatus::Parse, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn censorlab_parsed_free(parsed: *mut CensorlabParsed) {
    if !parsed.is_null() {
        drop(Box::from_raw(parsed));
    }
}

/// Stores the page's hit count in `out_count` and sets `out_has` when one was found.
#[no_mangle]
pub unsafe extern "C" fn censorlab_parsed_hit_count(
    parsed: *const CensorlabParsed,
    out_has: *mut bool,
    out_count: *mut u64,
) -> CensorlabStatus {
    guard(|| {
        check_out!(parsed, out_has, out_count);
        let hc = (*parsed).0.hit_count;
        *out_has = hc.is_some();
        *out_count = hc.unwrap_or(0);
        CensorlabStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn censorlab_parsed_banner(
    parsed: *const CensorlabParsed,
    out: *mut bool,
) -> CensorlabStatus {
    guard(|| {
        check_out!(parsed, out);
        *out = (*parsed).0.banner_present;
        CensorlabStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn censorlab_parsed_entry_count(
    parsed: *const CensorlabParsed,
    out: *mut usize,
) -> CensorlabStatus {
    guard(|| {
        check_out!(parsed, out);
        *out = (*parsed).0.entries.len();
        CensorlabStatus::Ok
    })
}

/// Registrable domain of entry `index`; free with [`censorlab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn censorlab_parsed_entry_domain(
    parsed: *const CensorlabParsed,
    index: usize,
    out: *mut *mut c_char,
) -> CensorlabStatus {
    guard(|| {
        check_out!(parsed, out);
        let parsed = &*parsed;
        match parsed.0.entries.get(index) {
            Some(e) => {
                *out = to_c_string(&e.registrable_domain);
                CensorlabStatus::Ok
            }
            None => fail(
                CensorlabStatus::InvalidArgument,
                format!("entry {index} out of range"),
            ),
        }
    })
}

/// Whether decoded page text carries one of the profile's banner needles.
#[no_mangle]
pub unsafe extern "C" fn censorlab_detect_banner(
    profile: *const CensorlabProfile,
    text: *const c_char,
    out: *mut bool,
) -> CensorlabStatus {
    guard(|| {
        check_out!(profile, out);
        let text = try_status!(str_arg(text, "text"));
        *out = engine::detect_banner(&(*profile).0, text);
        CensorlabStatus::Ok
    })
}

/// `numerator / denominator`; pass `has_* = false` for an absent count.
#[no_mangle]
pub extern "C" fn censorlab_hit_ratio(
    has_numerator: bool,
    numerator: u64,
    has_denominator: bool,
    denominator: u64,
) -> CensorlabRatio {
    let p = analyzer::hit_ratio(
        has_numerator.then_some(numerator),
        has_denominator.then_some(denominator),
    );
    let flags = p
        .flags
        .iter()
        .map(|f| match f {
            RatioFlag::ZeroNumerator => CENSORLAB_FLAG_ZERO_NUMERATOR,
            RatioFlag::ZeroDenominator => CENSORLAB_FLAG_ZERO_DENOMINATOR,
            RatioFlag::MissingData => CENSORLAB_FLAG_MISSING_DATA,
        })
        .fold(0, |a, b| a | b);
    CensorlabRatio {
        has_ratio: p.ratio.is_some(),
        ratio: p.ratio.unwrap_or(0.0),
        flags,
    }
}

#[no_mangle]
pub extern "C" fn censorlab_band_classify(median: f64, low: f64, high: f64) -> CensorlabBand {
    match analyzer::band_classify(median, low, high) {
        BandClass::LowTail => CensorlabBand::LowTail,
        BandClass::Unremarkable => CensorlabBand::Unremarkable,
        BandClass::HighTail => CensorlabBand::HighTail,
    }
}

/// `trigger / observation` rounded to two decimals.
#[no_mangle]
pub unsafe extern "C" fn censorlab_banner_trigger_ratio(
    trigger: u32,
    observation: u32,
    out: *mut f64,
) -> CensorlabStatus {
    guard(|| {
        check_out!(out);
        match analyzer::banner_trigger_ratio(trigger, observation) {
            Ok(r) => {
                *out = r;
                CensorlabStatus::Ok
            }
            Err(e) => fail(CensorlabStatus::ZeroObservations, e.to_string()),
        }
    })
}

/// Loads run `run_id` from the store rooted at `store_root`.
#[no_mangle]
pub unsafe extern "C" fn censorlab_run_load(
    store_root: *const c_char,
    run_id: *const c_char,
    out: *mut *mut CensorlabRun,
) -> CensorlabStatus {
    guard(|| {
        check_out!(out);
        let root = try_status!(str_arg(store_root, "store_root"));
        let id = try_status!(str_arg(run_id, "run_id"));
        let store = match RunStore::open_existing(root) {
            Ok(s) => s,
            Err(e) => return fail(CensorlabStatus::Io, e.to_string()),
        };
        match store.load_run(id) {
            Ok((manifest, records)) => {
                *out = Box::into_raw(Box::new(CensorlabRun { manifest, records }));
                CensorlabStatus::Ok
            }
            Err(e @ censorlab::store::StoreError::UnknownRun(_)) => {
                fail(CensorlabStatus::NotFound, e.to_string())
            }
            Err(e @ censorlab::store::StoreError::Corrupt { .. }) => {
                fail(CensorlabStatus::Parse, e.to_string())
            }
            Err(e) => fail(CensorlabStatus::Io, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn censorlab_run_free(run: *mut CensorlabRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

#[no_mangle]
pub unsafe extern "C" fn censorlab_run_record_count(
    run: *const CensorlabRun,
    out: *mut usize,
) -> CensorlabStatus {
    guard(|| {
        check_out!(run, out);
        *out = (*run).records.len();
        CensorlabStatus::Ok
    })
}

/// The run manifest as JSON; free with [`censorlab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn censorlab_run_manifest_json(
    run: *const CensorlabRun,
    out: *mut *mut c_char,
) -> CensorlabStatus {
    guard(|| {
        check_out!(run, out);
        match serde_json::to_string(&(*run).manifest) {
            Ok(s) => {
                *out = to_c_string(&s);
                CensorlabStatus::Ok
            }
            Err(e) => fail(CensorlabStatus::Parse, e.to_string()),
        }
    })
}

/// Record `index` as one JSON line; free with [`censorlab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn censorlab_run_record_json(
    run: *const CensorlabRun,
    index: usize,
    out: *mut *mut c_char,
) -> CensorlabStatus {
    guard(|| {
        check_out!(run, out);
        let run = &*run;
        let Some(r) = run.records.get(index) else {
            return fail(
                CensorlabStatus::InvalidArgument,
                format!("record {index} out of range"),
            );
        };
        match serde_json::to_string(r) {
            Ok(s) => {
                *out = to_c_string(&s);
                CensorlabStatus::Ok
            }
            Err(e) => fail(CensorlabStatus::Parse, e.to_string()),
        }
    })
}
