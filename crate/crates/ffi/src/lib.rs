//! C ABI for the payment-ner tagging pipeline.
//!
//! The surface is a classic opaque-handle design: load a tagger (trained
//! CRF model file or the builtin rule baseline), tag messages, free the
//! handle. Results cross the boundary as JSON strings so any language with
//! a C FFI and a JSON parser can bind without sharing Rust types.
//!
//! Every function returns a [`PnStatus`]; on failure a thread-local error
//! message is available via [`pn_last_error_message`] until the next call
//! on the same thread. Strings returned through out-parameters must be
//! released with [`pn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};

use payment_ner::baseline::RuleSet;
use payment_ner::corpus::{MessageFlags, MessageFormat, PaymentMessage};
use payment_ner::crf::load_model;
use payment_ner::features::Gazetteers;
use payment_ner::tagger::{CrfTagger, RuleTagger, Tagger};

/// Status codes returned by every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnStatus {
    PnOk = 0,
    PnNullArgument = 1,
    PnInvalidUtf8 = 2,
    PnIoError = 3,
    PnParseError = 4,
    PnTagError = 5,
    PnPanic = 6,
}

/// Opaque tagger handle. Immutable after construction; safe to share
/// across threads.
pub struct PnTagger {
    inner: Box<dyn Tagger>,
    counter: AtomicU64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn guard<F: FnOnce() -> PnStatus>(f: F) -> PnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            PnStatus::PnPanic
        }
    }
}

unsafe fn required_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, PnStatus> {
    if ptr.is_null() {
        set_last_error(&format!("{name} is null"));
        return Err(PnStatus::PnNullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error(&format!("{name} is not valid UTF-8"));
        PnStatus::PnInvalidUtf8
    })
}

/// Library version as a static string; never freed by the caller.
#[no_mangle]
pub extern "C" fn pn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. The pointer is
/// valid until the next payment-ner call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn pn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Loads a trained CRF model file into a tagger handle.
///
/// # Safety
/// `model_path` must be a valid NUL-terminated string and `out` a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn pn_tagger_load_crf(
    model_path: *const c_char,
    out: *mut *mut PnTagger,
) -> PnStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("out is null");
            return PnStatus::PnNullArgument;
        }
        let path = match required_str(model_path, "model_path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) => {
                set_last_error(&format!("{path}: {e}"));
                return PnStatus::PnIoError;
            }
        };
        let model = match load_model(&mut BufReader::new(file)) {
            Ok(m) => m,
            Err(e) => {
                set_last_error(&format!("{path}: {e}"));
                return PnStatus::PnParseError;
            }
        };
        let tagger = CrfTagger::new(model, Gazetteers::builtin());
        let handle = Box::new(PnTagger { inner: Box::new(tagger), counter: AtomicU64::new(0) });
        *out = Box::into_raw(handle);
        PnStatus::PnOk
    })
}

/// Creates a rule-based baseline tagger (no model file required).
///
/// # Safety
/// `out` must be a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn pn_tagger_new_baseline(out: *mut *mut PnTagger) -> PnStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("out is null");
            return PnStatus::PnNullArgument;
        }
        let tagger = RuleTagger::new(RuleSet::default(), Gazetteers::builtin());
        let handle = Box::new(PnTagger { inner: Box::new(tagger), counter: AtomicU64::new(0) });
        *out = Box::into_raw(handle);
        PnStatus::PnOk
    })
}

/// Tags one message. `format` is one of `MT103`, `PAIN001`, `ACH`, `SEPA`,
/// `OTHER`. On success `*out_json` receives a JSON document:
///
/// ```json
/// {"spans": [{"entity_type": "PERSON_NAME", "token_start": 1,
///             "token_end": 2, "char_start": 5, "char_end": 13,
///             "text": "JOHN DOE"}]}
/// ```
///
/// `char_start`/`char_end` are byte offsets into the UTF-8 input text.
///
/// # Safety
/// All pointers must be valid; free `*out_json` with [`pn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pn_tagger_tag_json(
    tagger: *const PnTagger,
    format: *const c_char,
    text: *const c_char,
    out_json: *mut *mut c_char,
) -> PnStatus {
    guard(|| {
        if tagger.is_null() || out_json.is_null() {
            set_last_error("tagger or out_json is null");
            return PnStatus::PnNullArgument;
        }
        let format_str = match required_str(format, "format") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let text_str = match required_str(text, "text") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let format: MessageFormat = match format_str.parse() {
            Ok(f) => f,
            Err(_) => {
                set_last_error(&format!("unknown message format {format_str:?}"));
                return PnStatus::PnParseError;
            }
        };
        let handle = &*tagger;
        let serial = handle.counter.fetch_add(1, Ordering::Relaxed);
        let message = PaymentMessage {
            id: format!("ffi-{serial:08}"),
            format,
            text: text_str.to_string(),
            language_tags: Default::default(),
            flags: MessageFlags::default(),
        };
        let tagged = match handle.inner.tag(&message) {
            Ok(t) => t,
            Err(e) => {
                set_last_error(&e.to_string());
                return PnStatus::PnTagError;
            }
        };
        let spans: Vec<serde_json::Value> = tagged
            .spans
            .iter()
            .map(|span| {
                let first = &tagged.tokens.tokens[span.token_start];
                let last = &tagged.tokens.tokens[span.token_end];
                serde_json::json!({
                    "entity_type": span.entity_type.as_str(),
                    "token_start": span.token_start,
                    "token_end": span.token_end,
                    "char_start": first.char_start,
                    "char_end": last.char_end,
                    "text": &message.text[first.char_start..last.char_end],
                })
            })
            .collect();
        let body = serde_json::json!({ "spans": spans }).to_string();
        let c_body = CString::new(body).expect("JSON output never contains NUL");
        *out_json = c_body.into_raw();
        PnStatus::PnOk
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must have come from this library and not been freed already.
#[no_mangle]
pub unsafe extern "C" fn pn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Frees a tagger handle.
///
/// # Safety
/// `tagger` must have come from this library and not been freed already.
#[no_mangle]
pub unsafe extern "C" fn pn_tagger_free(tagger: *mut PnTagger) {
    if !tagger.is_null() {
        drop(Box::from_raw(tagger));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn baseline_handle_tags_through_the_abi() {
        let mut handle: *mut PnTagger = ptr::null_mut();
        assert_eq!(unsafe { pn_tagger_new_baseline(&mut handle) }, PnStatus::PnOk);
        assert!(!handle.is_null());

        let format = c("MT103");
        let text = c(":59:GB82WEST12345698765432\n:70:RENT MARCH");
        let mut out: *mut c_char = ptr::null_mut();
        let status =
            unsafe { pn_tagger_tag_json(handle, format.as_ptr(), text.as_ptr(), &mut out) };
        assert_eq!(status, PnStatus::PnOk);
        let json = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { pn_string_free(out) };
        unsafe { pn_tagger_free(handle) };

        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let spans = value["spans"].as_array().unwrap();
        assert!(spans.iter().any(|s| s["entity_type"] == "ACCOUNT_NUMBER"));
        assert!(spans.iter().any(|s| s["entity_type"] == "PURPOSE"));
        // Char offsets select exactly the reported text.
        for span in spans {
            let start = span["char_start"].as_u64().unwrap() as usize;
            let end = span["char_end"].as_u64().unwrap() as usize;
            assert_eq!(&text.to_str().unwrap()[start..end], span["text"].as_str().unwrap());
        }
    }

    #[test]
    fn crf_model_loads_from_a_file_and_tags() {
        use payment_ner::corpus::{generate_corpus, GeneratorConfig};
        use payment_ner::crf::{save_model, train, TrainConfig};

        let corpus = generate_corpus(&GeneratorConfig::with_count_seed(40, 17)).unwrap();
        let config = TrainConfig { max_iterations: 25, ..Default::default() };
        let model = train(&corpus, &[], &Gazetteers::builtin(), &config, None).unwrap();
        let dir = std::env::temp_dir().join(format!("pn_ffi_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        let mut sink = std::io::BufWriter::new(std::fs::File::create(&path).unwrap());
        save_model(&model, &mut sink).unwrap();
        drop(sink);

        let c_path = c(path.to_str().unwrap());
        let mut handle: *mut PnTagger = ptr::null_mut();
        assert_eq!(unsafe { pn_tagger_load_crf(c_path.as_ptr(), &mut handle) }, PnStatus::PnOk);
        let format = c("SEPA");
        let text = c("EMPFAENGER: HANS MUELLER\nIBAN: DE02120300000000202051\nBETRAG: EUR 10,00");
        let mut out: *mut c_char = ptr::null_mut();
        assert_eq!(
            unsafe { pn_tagger_tag_json(handle, format.as_ptr(), text.as_ptr(), &mut out) },
            PnStatus::PnOk
        );
        unsafe { pn_string_free(out) };
        unsafe { pn_tagger_free(handle) };
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn error_paths_set_messages() {
        let mut handle: *mut PnTagger = ptr::null_mut();
        let status = unsafe { pn_tagger_load_crf(ptr::null(), &mut handle) };
        assert_eq!(status, PnStatus::PnNullArgument);

        let missing = c("/nonexistent/model.json");
        let status = unsafe { pn_tagger_load_crf(missing.as_ptr(), &mut handle) };
        assert_eq!(status, PnStatus::PnIoError);
        let message = unsafe { CStr::from_ptr(pn_last_error_message()) };
        assert!(message.to_str().unwrap().contains("nonexistent"));

        let mut baseline: *mut PnTagger = ptr::null_mut();
        unsafe { pn_tagger_new_baseline(&mut baseline) };
        let format = c("TELEX");
        let text = c("hello");
        let mut out: *mut c_char = ptr::null_mut();
        let status =
            unsafe { pn_tagger_tag_json(baseline, format.as_ptr(), text.as_ptr(), &mut out) };
        assert_eq!(status, PnStatus::PnParseError);
        unsafe { pn_tagger_free(baseline) };
    }

    #[test]
    fn version_is_a_static_string() {
        let version = unsafe { CStr::from_ptr(pn_version()) };
        assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
