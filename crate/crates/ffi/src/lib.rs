//! C ABI for the corpus-curation toolkit.
//!
//! Conventions:
//! - objects are opaque handles created by `*_load`/`*_new` functions and
//!   released by the matching `*_free`;
//! - functions returning [`WcStatus`] report failure details through
//!   [`wc_last_error_message`];
//! - strings returned by the library are UTF-8, NUL-terminated and owned
//!   by the caller, to be released with [`wc_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::PathBuf;

use webcorpus::classifier::NgramModel;
use webcorpus::dedup;
use webcorpus::filters::{self, RuleThresholds, WebSource};
use webcorpus::pipeline::{self, PipelineConfig};
use webcorpus::qa::{self, QaKeywordSets};
use webcorpus::record::{Document, DomainTag};

/// Result codes for fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcStatus {
    Ok = 0,
    /// A pointer argument was NULL or text was not valid UTF-8.
    InvalidArgument = 1,
    /// File could not be read or written.
    Io = 2,
    /// File contents or configuration were malformed.
    Parse = 3,
    /// Any other failure; see `wc_last_error_message`.
    Internal = 4,
}

/// Which rule set to apply in `wc_filter_report_json`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcWebSource {
    Wet = 0,
    Warc = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let cstring = CString::new(msg.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error").expect("static"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn status_of(err: &webcorpus::Error) -> WcStatus {
    match err {
        webcorpus::Error::Io { .. } => WcStatus::Io,
        webcorpus::Error::Format { .. } => WcStatus::Parse,
        webcorpus::Error::Config(_) => WcStatus::Parse,
        webcorpus::Error::InvalidInput(_) => WcStatus::InvalidArgument,
    }
}

/// # Safety
/// `ptr` must be NULL or a NUL-terminated string valid for reads.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

fn give_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Library version as a static string (do not free).
#[no_mangle]
pub extern "C" fn wc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent error on this thread, or NULL. Free with
/// `wc_string_free`.
#[no_mangle]
pub extern "C" fn wc_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|msg| give_string(msg.to_string_lossy().into_owned()))
            .unwrap_or(std::ptr::null_mut())
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `ptr` must be NULL or a pointer previously returned by a `wc_*`
/// function that documents `wc_string_free` ownership, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wc_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(CString::from_raw(ptr));
    }
}

/// Opaque handle to a loaded n-gram classifier.
pub struct WcClassifier {
    inner: NgramModel,
}

/// Load a classifier model file. Returns NULL on failure (see
/// `wc_last_error_message`).
///
/// # Safety
/// `path` must be a NUL-terminated string valid for reads.
#[no_mangle]
pub unsafe extern "C" fn wc_classifier_load(path: *const c_char) -> *mut WcClassifier {
    let Some(path) = utf8_arg(path) else {
        set_error("path was NULL or not UTF-8".into());
        return std::ptr::null_mut();
    };
    match NgramModel::load(&PathBuf::from(path)) {
        Ok(inner) => Box::into_raw(Box::new(WcClassifier { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Score a text with a loaded classifier; the result is a confidence in
/// [0,1]. Returns -1.0 on invalid arguments.
///
/// # Safety
/// `handle` must come from `wc_classifier_load` and not be freed;
/// `text` must be a NUL-terminated string valid for reads.
#[no_mangle]
pub unsafe extern "C" fn wc_classifier_score(
    handle: *const WcClassifier,
    text: *const c_char,
) -> f64 {
    let (Some(handle), Some(text)) = (handle.as_ref(), utf8_arg(text)) else {
        set_error("NULL handle or invalid text".into());
        return -1.0;
    };
    handle.inner.score(text)
}

/// # Safety
/// `handle` must be NULL or a pointer from `wc_classifier_load`, not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn wc_classifier_free(handle: *mut WcClassifier) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of values in a MinHash signature.
pub const WC_SIGNATURE_LEN: usize = 117;

/// Compute the 117-value MinHash signature of a text into `out` (an array
/// of `WC_SIGNATURE_LEN` u64 slots).
///
/// # Safety
/// `text` must be a NUL-terminated string valid for reads; `out` must be
/// valid for writes of `WC_SIGNATURE_LEN` u64 values.
#[no_mangle]
pub unsafe extern "C" fn wc_minhash_signature(
    text: *const c_char,
    seed: u64,
    out: *mut u64,
) -> WcStatus {
    let Some(text) = utf8_arg(text) else {
        set_error("text was NULL or not UTF-8".into());
        return WcStatus::InvalidArgument;
    };
    if out.is_null() {
        set_error("out was NULL".into());
        return WcStatus::InvalidArgument;
    }
    let doc = Document::new("ffi", "", "", text, DomainTag::Web);
    match dedup::MinHasher::new(seed).signature(&doc) {
        Ok(sig) => {
            std::ptr::copy_nonoverlapping(sig.values.as_ptr(), out, WC_SIGNATURE_LEN);
            WcStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Apply the web quality rules to a text and return the full per-rule
/// report as a JSON string in `*out` (free with `wc_string_free`).
/// Thresholds are the shipped defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string valid for reads; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wc_filter_report_json(
    text: *const c_char,
    source: WcWebSource,
    out: *mut *mut c_char,
) -> WcStatus {
    let Some(text) = utf8_arg(text) else {
        set_error("text was NULL or not UTF-8".into());
        return WcStatus::InvalidArgument;
    };
    if out.is_null() {
        set_error("out was NULL".into());
        return WcStatus::InvalidArgument;
    }
    let doc = Document::new("ffi", "", "", text, DomainTag::Web);
    let thresholds = RuleThresholds::default();
    let web_source = match source {
        WcWebSource::Wet => WebSource::Wet,
        WcWebSource::Warc => WebSource::Warc,
    };
    let (_, report) = filters::run_web_filters(&doc, web_source, &thresholds, None);
    match serde_json::to_string(&report) {
        Ok(json) => {
            *out = give_string(json);
            WcStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            WcStatus::Internal
        }
    }
}

/// Extract multiple-choice questions from a text and return the canonical
/// blocks as a JSON array of strings in `*out` (free with
/// `wc_string_free`). An empty array means no items were found.
///
/// # Safety
/// `text` must be a NUL-terminated string valid for reads; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wc_mcq_extract_json(
    text: *const c_char,
    out: *mut *mut c_char,
) -> WcStatus {
    let Some(text) = utf8_arg(text) else {
        set_error("text was NULL or not UTF-8".into());
        return WcStatus::InvalidArgument;
    };
    if out.is_null() {
        set_error("out was NULL".into());
        return WcStatus::InvalidArgument;
    }
    let sets = QaKeywordSets::default();
    let blocks: Vec<String> = qa::extract_mcq(text, "ffi", &sets)
        .iter()
        .filter_map(|item| qa::format_mcq(item).ok())
        .collect();
    match serde_json::to_string(&blocks) {
        Ok(json) => {
            *out = give_string(json);
            WcStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            WcStatus::Internal
        }
    }
}

/// Run a full pipeline from a TOML configuration file (the same format the
/// CLI consumes).
///
/// # Safety
/// `config_path` must be a NUL-terminated string valid for reads.
#[no_mangle]
pub unsafe extern "C" fn wc_run_pipeline(config_path: *const c_char) -> WcStatus {
    let Some(path) = utf8_arg(config_path) else {
        set_error("config_path was NULL or not UTF-8".into());
        return WcStatus::InvalidArgument;
    };
    let cfg = match PipelineConfig::load(&PathBuf::from(path)) {
        Ok(cfg) => cfg,
        Err(e) => {
            set_error(e.to_string());
            return status_of(&e);
        }
    };
    match pipeline::run(&cfg) {
        Ok(_) => WcStatus::Ok,
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn version_is_static_utf8() {
        let v = unsafe { CStr::from_ptr(wc_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }

    #[test]
    fn signature_roundtrip_through_c_abi() {
        let text = c("the quick brown fox jumps over the lazy dog again");
        let mut out = [0u64; WC_SIGNATURE_LEN];
        let status = unsafe { wc_minhash_signature(text.as_ptr(), 7, out.as_mut_ptr()) };
        assert_eq!(status, WcStatus::Ok);
        let doc = Document::new("x", "", "", text.to_str().unwrap(), DomainTag::Web);
        let expected = dedup::MinHasher::new(7).signature(&doc).unwrap();
        assert_eq!(out.to_vec(), expected.values);
    }

    #[test]
    fn null_arguments_are_invalid_not_fatal() {
        let mut out = [0u64; WC_SIGNATURE_LEN];
        let status = unsafe { wc_minhash_signature(std::ptr::null(), 7, out.as_mut_ptr()) };
        assert_eq!(status, WcStatus::InvalidArgument);
        let msg = wc_last_error_message();
        assert!(!msg.is_null());
        unsafe { wc_string_free(msg) };
    }

    #[test]
    fn empty_text_maps_to_invalid_argument() {
        let text = c("");
        let mut out = [0u64; WC_SIGNATURE_LEN];
        let status = unsafe { wc_minhash_signature(text.as_ptr(), 7, out.as_mut_ptr()) };
        assert_eq!(status, WcStatus::InvalidArgument);
    }

    #[test]
    fn filter_report_json_contains_verdicts() {
        let text = c("HELLO WORLD NOW. lowercase text keeps going here.");
        let mut out: *mut c_char = std::ptr::null_mut();
        let status = unsafe { wc_filter_report_json(text.as_ptr(), WcWebSource::Warc, &mut out) };
        assert_eq!(status, WcStatus::Ok);
        let json = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { wc_string_free(out) };
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(value["verdicts"].as_array().unwrap().len() > 10);
        assert!(value["removed_sentences"].as_array().is_some());
    }

    #[test]
    fn mcq_extraction_over_c_abi() {
        let text = c("Which way is up?\nA. left\nB. up\nAnswer:B");
        let mut out: *mut c_char = std::ptr::null_mut();
        let status = unsafe { wc_mcq_extract_json(text.as_ptr(), &mut out) };
        assert_eq!(status, WcStatus::Ok);
        let json = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { wc_string_free(out) };
        let blocks: Vec<String> = serde_json::from_str(&json).unwrap();
        assert_eq!(blocks, vec!["Which way is up?\nA. left\nB. up\nAnswer:B"]);
    }

    #[test]
    fn classifier_load_rejects_garbage() {
        let dir = std::env::temp_dir().join("wcffi-garbage-model");
        std::fs::write(&dir, b"not a model").unwrap();
        let path = c(dir.to_str().unwrap());
        let handle = unsafe { wc_classifier_load(path.as_ptr()) };
        assert!(handle.is_null());
        let msg = wc_last_error_message();
        assert!(!msg.is_null());
        unsafe { wc_string_free(msg) };
    }

    #[test]
    fn run_pipeline_from_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let snapshot = dir.path().join("2023-40");
        std::fs::create_dir_all(&snapshot).unwrap();
        let payload = "a tolerably long paragraph of text ".repeat(12);
        let record = format!(
            "WARC/1.0\r\nWARC-Type: conversion\r\nWARC-Target-URI: http://e/\r\nContent-Length: {}\r\n\r\n{payload}\r\n\r\n",
            payload.len()
        );
        let shard = snapshot.join("s.wet");
        std::fs::write(&shard, record).unwrap();
        let out_dir = dir.path().join("out");
        let config = format!(
            "pipeline = \"web_wet\"\ninput_paths = [{:?}]\noutput_dir = {:?}\n",
            shard.to_str().unwrap(),
            out_dir.to_str().unwrap()
        );
        let cfg_path = dir.path().join("cfg.toml");
        std::fs::write(&cfg_path, config).unwrap();
        let c_path = c(cfg_path.to_str().unwrap());
        let status = unsafe { wc_run_pipeline(c_path.as_ptr()) };
        assert_eq!(status, WcStatus::Ok);
        assert!(out_dir.join("run_report.json").exists());
        assert!(out_dir.join("s.jsonl").exists());
    }

    #[test]
    fn header_was_generated() {
        let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/webcorpus.h");
        let text = std::fs::read_to_string(header).expect("generated header");
        for decl in [
            "wc_version",
            "wc_classifier_load",
            "wc_classifier_score",
            "wc_minhash_signature",
            "wc_filter_report_json",
            "wc_mcq_extract_json",
            "wc_run_pipeline",
            "wc_string_free",
            "WcStatus",
            "WcClassifier",
        ] {
            assert!(text.contains(decl), "header missing {decl}");
        }
    }
}
